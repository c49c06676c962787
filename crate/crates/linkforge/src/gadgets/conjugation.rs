//! Complex conjugation, z -> conj(z) on the disk |z| <= r.
//!
//! Two straight-line gadgets confine vertex A to the real segment [a, b] and
//! vertex B to [-b, -a]. A rigidified rhombus A-C-B-D of side c between them
//! puts C and D on the perpendicular bisector of A-B, which is a vertical
//! line; the brace keeps them on opposite sides, so D is always the mirror
//! image of C across the real axis. With b - r > c > a + r the reachable
//! inputs cover the whole disk |z| <= r; this construction takes a = r,
//! c = 3r, b = 5r.

use num_complex::Complex64;

use super::straightline::{self, SlParts};
use super::{join, DomainDescriptor, Instance, InstanceKind, PlaceError, QfLinkage};
use crate::geom::Side;
use crate::linkage::{EdgeKind, Linkage, VertexId};

fn seg_a(r: f64) -> f64 {
    r
}

fn rhombus_side(r: f64) -> f64 {
    3.0 * r
}

fn seg_b(r: f64) -> f64 {
    5.0 * r
}

fn sub(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_owned()
    } else {
        format!("{prefix}/{name}")
    }
}

fn lines_for(prefix: &str, r: f64) -> Result<(SlParts, SlParts), PlaceError> {
    let (a, b) = (seg_a(r), seg_b(r));
    let pos = straightline::parts_for(&sub(prefix, "pos"), Complex64::new(a, 0.0), Complex64::new(b, 0.0))?;
    let neg =
        straightline::parts_for(&sub(prefix, "neg"), Complex64::new(-b, 0.0), Complex64::new(-a, 0.0))?;
    Ok((pos, neg))
}

pub(super) fn append(
    l: &mut Linkage,
    prefix: &str,
    r: f64,
    vin: &VertexId,
    vout: &VertexId,
) -> Result<(), PlaceError> {
    if !(r > 0.0) {
        return Err(PlaceError::Construction(format!("conjugation radius must be positive, got {r}")));
    }
    let (a, b) = (seg_a(r), seg_b(r));
    let pos =
        straightline::append(l, &sub(prefix, "pos"), Complex64::new(a, 0.0), Complex64::new(b, 0.0))?;
    let neg =
        straightline::append(l, &sub(prefix, "neg"), Complex64::new(-b, 0.0), Complex64::new(-a, 0.0))?;
    let c = rhombus_side(r);
    let (va, vb) = (&pos.tracer, &neg.tracer);
    let p1 = join(prefix, "P1");
    let p2 = join(prefix, "P2");
    l.add_edge(va.clone(), vin.clone(), c)?;
    l.add_edge(vin.clone(), vb.clone(), c)?;
    l.add_edge(vb.clone(), vout.clone(), c)?;
    l.add_edge(vout.clone(), va.clone(), c)?;
    l.add_edge(p1.clone(), va.clone(), c / 2.0)?;
    l.add_edge(p1.clone(), vin.clone(), c / 2.0)?;
    l.add_edge(p2.clone(), vb.clone(), c / 2.0)?;
    l.add_edge(p2.clone(), vout.clone(), c / 2.0)?;
    l.add_edge_kind(p1, p2, c, EdgeKind::Brace)?;
    Ok(())
}

pub(super) fn place(
    prefix: &str,
    r: f64,
    vin: &VertexId,
    vout: &VertexId,
    z: Complex64,
    side: Side,
) -> Result<Vec<(VertexId, Complex64)>, PlaceError> {
    if z.norm() > r * (1.0 + 1e-9) {
        return Err(PlaceError::Infeasible(format!("|input| = {} exceeds radius {r}", z.norm())));
    }
    let c = rhombus_side(r);
    let reach = (c * c - z.im * z.im).sqrt();
    let alpha = Complex64::new(z.re + reach, 0.0);
    let beta = Complex64::new(z.re - reach, 0.0);
    let (pos_line, neg_line) = lines_for(prefix, r)?;
    let mut out = pos_line.place_positions(alpha, side)?;
    out.extend(neg_line.place_positions(beta, side)?);
    out.push((vin.clone(), z));
    out.push((vout.clone(), z.conj()));
    out.push((join(prefix, "P1"), (alpha + z) / 2.0));
    out.push((join(prefix, "P2"), (beta + z.conj()) / 2.0));
    Ok(out)
}

/// Build the conjugation gadget with certified domain |z| <= r.
pub fn conjugation(r: f64) -> Result<QfLinkage, PlaceError> {
    let vin = VertexId::new("C");
    let vout = VertexId::new("D");
    let top = Instance {
        kind: InstanceKind::Conjugation { r },
        prefix: String::new(),
        io: vec![vin.clone(), vout.clone()],
    };
    let mut l = Linkage::new();
    top.append_to(&mut l)?;
    Ok(QfLinkage {
        linkage: l,
        inputs: vec![vin],
        outputs: vec![vout],
        domain: DomainDescriptor::disk(1, r),
        plan: vec![top],
    })
}
