//! Exact straight-line motion from an inversor.
//!
//! Constrain the inversor input D to a circle through the pivot (a crank bar
//! from a pinned center): inversion maps that circle to a straight line, so
//! the output traces a line segment -- the reachable arc of the circle,
//! inverted. A fixed native construction traces a horizontal segment at
//! height t^2/(2d); rescaling and an isometry then carry it onto any
//! requested segment exactly.

use num_complex::Complex64;

use super::{join, peaucellier, PlaceError};
use crate::geom::Side;
use crate::linkage::{EdgeKind, Linkage, Realization, VertexId};

// Native construction: inversor with t^2 = 16 and cable bound 3 (annulus
// radii 2 and 8), crank of radius 1.5 centered at 1.5i. The crank diameter
// satisfies r_in < 2d < t: large enough that the circle leaves the inner
// annulus hole, small enough that |D| never reaches t, where the inversor
// cell folds (D = E) and branch tracking would degenerate. Every target
// segment is an exact scaled isometric image of the native trace.
const T_NAT: f64 = 4.0;
const B_NAT: f64 = 4.0;
const C_NAT: f64 = 3.0;
const D_NAT: f64 = 1.5;

fn a_nat() -> f64 {
    (T_NAT * T_NAT + B_NAT * B_NAT).sqrt()
}

/// Height of the native traced line: t^2 / (2d).
fn line_height() -> f64 {
    T_NAT * T_NAT / (2.0 * D_NAT)
}

/// Native half-length of the traced segment.
fn half_span() -> f64 {
    let (lo, _) = peaucellier::annulus_radii(a_nat(), B_NAT, C_NAT);
    let reach = T_NAT * T_NAT / lo;
    (reach * reach - line_height() * line_height()).sqrt()
}

/// Feasible crank angles: the arc of the native drive circle inside the
/// inversor annulus, symmetric about the top of the circle.
fn native_theta_range() -> (f64, f64) {
    let (lo, _) = peaucellier::annulus_radii(a_nat(), B_NAT, C_NAT);
    let sin_min = lo * lo / (2.0 * D_NAT * D_NAT) - 1.0;
    let t0 = sin_min.asin();
    (t0, std::f64::consts::PI - t0)
}

/// Similarity carrying the native construction onto the segment `from..to`.
#[derive(Debug, Clone, Copy)]
struct Similarity {
    scale: f64,
    rot: Complex64,
    trans: Complex64,
}

impl Similarity {
    fn for_segment(from: Complex64, to: Complex64) -> Result<Similarity, PlaceError> {
        let len = (to - from).norm();
        if !(len > 0.0) {
            return Err(PlaceError::Construction("segment endpoints must differ".into()));
        }
        let scale = len / (2.0 * half_span());
        let rot = (to - from) / len;
        let trans = (from + to) / 2.0 - scale * rot * Complex64::new(0.0, line_height());
        Ok(Similarity { scale, rot, trans })
    }

    fn apply(&self, z: Complex64) -> Complex64 {
        self.rot * (self.scale * z) + self.trans
    }

    fn invert(&self, z: Complex64) -> Complex64 {
        (z - self.trans) / (self.rot * self.scale)
    }
}

/// Circle (with feasible angular range) the drive vertex is confined to.
#[derive(Debug, Clone, Copy)]
pub struct DriveArc {
    pub center: Complex64,
    pub radius: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl DriveArc {
    pub fn at(&self, theta: f64) -> Complex64 {
        self.center + self.radius * crate::geom::unit(theta)
    }
}

/// Geometry of one straight-line sub-gadget inside a larger linkage.
#[derive(Debug, Clone)]
pub(super) struct SlParts {
    pub tracer: VertexId,
    pub drive: VertexId,
    pub drive_arc: DriveArc,
    prefix: String,
    map: Similarity,
}

impl SlParts {
    /// Positions for every vertex of this sub-gadget with the tracer at
    /// `target` (which must lie on the traced segment).
    pub fn place_positions(
        &self,
        target: Complex64,
        side: Side,
    ) -> Result<Vec<(VertexId, Complex64)>, PlaceError> {
        let w = self.map.invert(target);
        let span = half_span();
        let slack = 1e-7 * span.max(1.0);
        if (w.im - line_height()).abs() > slack || w.re.abs() > span + slack {
            return Err(PlaceError::Infeasible(format!(
                "tracer target {target} off the traced segment"
            )));
        }
        // Inversion is involutive: the drive sits at the inverse of the tracer.
        let d_nat = T_NAT * T_NAT * w / w.norm_sqr();
        let cell = peaucellier::place_cell(a_nat(), B_NAT, C_NAT, d_nat, side)?;
        let p = |name: &str| join(&self.prefix, name);
        let out = vec![
            (p("O"), Complex64::new(0.0, 0.0)),
            (p("G"), Complex64::new(0.0, D_NAT)),
            (p("B"), cell.b),
            (p("C"), cell.c),
            (p("D"), d_nat),
            (p("A"), w),
            (p("P1"), cell.p1),
            (p("P2"), cell.p2),
            (p("M"), cell.m),
            (p("K"), cell.k),
        ];
        Ok(out.into_iter().map(|(v, z)| (v, self.map.apply(z))).collect())
    }
}

/// The sub-gadget geometry alone, without touching any linkage. Pure in its
/// arguments, so placement code can rebuild it deterministically.
pub(super) fn parts_for(prefix: &str, from: Complex64, to: Complex64) -> Result<SlParts, PlaceError> {
    let map = Similarity::for_segment(from, to)?;
    let (theta_lo, theta_hi) = native_theta_range();
    let spin = map.rot.arg();
    Ok(SlParts {
        tracer: join(prefix, "A"),
        drive: join(prefix, "D"),
        drive_arc: DriveArc {
            center: map.apply(Complex64::new(0.0, D_NAT)),
            radius: map.scale * D_NAT,
            theta_lo: theta_lo + spin,
            theta_hi: theta_hi + spin,
        },
        prefix: prefix.to_string(),
        map,
    })
}

pub(super) fn append(
    l: &mut Linkage,
    prefix: &str,
    from: Complex64,
    to: Complex64,
) -> Result<SlParts, PlaceError> {
    let parts = parts_for(prefix, from, to)?;
    let map = parts.map;
    let k = map.scale;
    let pivot = join(prefix, "O");
    let crank = join(prefix, "G");
    let vb = join(prefix, "B");
    let vc = join(prefix, "C");
    let drive = join(prefix, "D");
    let tracer = join(prefix, "A");
    let p1 = join(prefix, "P1");
    let p2 = join(prefix, "P2");
    let m = join(prefix, "M");
    let cable = join(prefix, "K");
    l.add_edge(pivot.clone(), vb.clone(), k * a_nat())?;
    l.add_edge(pivot.clone(), vc.clone(), k * a_nat())?;
    for hub in [&drive, &tracer] {
        l.add_edge(hub.clone(), vb.clone(), k * B_NAT)?;
        l.add_edge(hub.clone(), vc.clone(), k * B_NAT)?;
    }
    l.add_edge(p1.clone(), vb, k * B_NAT / 2.0)?;
    l.add_edge(p1.clone(), drive.clone(), k * B_NAT / 2.0)?;
    l.add_edge(p2.clone(), vc, k * B_NAT / 2.0)?;
    l.add_edge(p2.clone(), tracer.clone(), k * B_NAT / 2.0)?;
    l.add_edge_kind(p1.clone(), p2.clone(), k * B_NAT, EdgeKind::Brace)?;
    l.add_edge(m.clone(), p1, k * B_NAT / 2.0)?;
    l.add_edge(m.clone(), p2, k * B_NAT / 2.0)?;
    l.add_edge_kind(cable.clone(), drive.clone(), k * C_NAT / 2.0, EdgeKind::Cable)?;
    l.add_edge_kind(cable, m, k * C_NAT / 2.0, EdgeKind::Cable)?;
    l.add_edge(crank.clone(), drive.clone(), k * D_NAT)?;
    l.set_pin(pivot, map.apply(Complex64::new(0.0, 0.0)));
    l.set_pin(crank, map.apply(Complex64::new(0.0, D_NAT)));
    Ok(parts)
}

/// A linkage whose marker vertex traces exactly a requested line segment.
#[derive(Debug, Clone)]
pub struct StraightLine {
    pub linkage: Linkage,
    /// The marker that traces the segment.
    pub tracer: VertexId,
    /// The crank-constrained inversor input, the natural vertex to drive.
    pub drive: VertexId,
    pub segment: (Complex64, Complex64),
    pub drive_arc: DriveArc,
    parts: SlParts,
}

impl StraightLine {
    /// Full realization with the tracer at `target` on the segment.
    pub fn place_at(&self, target: Complex64, side: Side) -> Result<Realization, PlaceError> {
        Ok(self.parts.place_positions(target, side)?.into_iter().collect())
    }
}

/// Build a linkage whose marker traces exactly the segment `from..to`.
pub fn straight_line(from: Complex64, to: Complex64) -> Result<StraightLine, PlaceError> {
    let mut l = Linkage::new();
    let parts = append(&mut l, "", from, to)?;
    Ok(StraightLine {
        linkage: l,
        tracer: parts.tracer.clone(),
        drive: parts.drive.clone(),
        segment: (from, to),
        drive_arc: parts.drive_arc,
        parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::sample_configurations;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn native_trace_sits_at_constant_height() {
        // Segment chosen to make the similarity the identity.
        let s = half_span();
        let h = line_height();
        let sl = straight_line(c(-s, h), c(s, h)).unwrap();
        assert!((sl.parts.map.scale - 1.0).abs() < 1e-12);
        for frac in [-0.99, -0.5, 0.0, 0.37, 1.0] {
            let target = c(frac * s, h);
            let r = sl.place_at(target, Side::Plus).unwrap();
            assert!(r.satisfies(&sl.linkage, crate::TOL_EXACT));
            let a = r.position(&sl.tracer);
            assert!((a.im - h).abs() < 1e-9, "height drifted: {}", a.im);
            assert!((a - target).norm() < 1e-9);
        }
    }

    #[test]
    fn placement_hits_requested_segment_exactly() {
        let (from, to) = (c(1.0, 0.0), c(2.0, 0.0));
        let sl = straight_line(from, to).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let target = from + t * (to - from);
            for side in [Side::Plus, Side::Minus] {
                let r = sl.place_at(target, side).unwrap();
                assert!(r.satisfies(&sl.linkage, crate::TOL_EXACT));
                assert!((r.position(&sl.tracer) - target).norm() < 1e-9);
            }
        }
        assert!(sl.place_at(c(0.5, 0.0), Side::Plus).is_err());
        assert!(sl.place_at(c(1.5, 0.3), Side::Plus).is_err());
    }

    #[test]
    fn sampled_drive_stays_on_crank_circle() {
        let sl = straight_line(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let samples = sample_configurations(&sl.linkage, 60, 19);
        assert!(samples.len() > 5, "solver found {} configurations", samples.len());
        for r in &samples {
            let d = r.position(&sl.drive);
            assert!(
                ((d - sl.drive_arc.center).norm() - sl.drive_arc.radius).abs() < crate::TOL_SOLVE * 10.0
            );
        }
    }

    #[test]
    fn sampled_tracer_stays_on_segment_line() {
        let (from, to) = (c(0.0, 0.0), c(1.0, 0.0));
        let sl = straight_line(from, to).unwrap();
        for r in sample_configurations(&sl.linkage, 60, 21) {
            let a = r.position(&sl.tracer);
            assert!(crate::geom::line_distance(a, from, to) < 1e-5, "tracer off line: {a}");
            // One-sided soundness: every sample is inside the segment span.
            assert!((-1e-5..=1.0 + 1e-5).contains(&a.re));
        }
    }

    #[test]
    fn rescale_carries_segment_along() {
        // Scaling the whole linkage by 3 turns a [1,2] tracer into [3,6]:
        // the rescaled linkage matches the directly-built one to rounding.
        let sl = straight_line(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        let scaled = sl.linkage.rescale(3.0).unwrap();
        let direct = straight_line(c(3.0, 0.0), c(6.0, 0.0)).unwrap();
        for (a, b) in scaled.edges().iter().zip(direct.linkage.edges()) {
            assert_eq!((&a.u, &a.v, a.kind), (&b.u, &b.v, b.kind));
            assert!((a.len - b.len).abs() < 1e-12);
        }
        for (a, b) in scaled.pins().values().zip(direct.linkage.pins().values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rotate_carries_segment_along() {
        use crate::linkage::EuclideanMotion;
        let sl = straight_line(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        let rotated = sl
            .linkage
            .transform(&EuclideanMotion::rotation(std::f64::consts::FRAC_PI_2))
            .unwrap();
        let direct = straight_line(c(0.0, 1.0), c(0.0, 2.0)).unwrap();
        for (a, b) in rotated.pins().values().zip(direct.linkage.pins().values()) {
            assert!((a - b).norm() < 1e-12);
        }
        for (ea, eb) in rotated.edges().iter().zip(direct.linkage.edges()) {
            assert!((ea.len - eb.len).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(straight_line(c(1.0, 1.0), c(1.0, 1.0)).is_err());
    }
}
