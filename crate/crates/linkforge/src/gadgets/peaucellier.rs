//! Peaucellier inversor: inversion through a circle, z -> t^2 * z / |z|^2
//! with t^2 = a^2 - b^2.
//!
//! Pivot A is pinned at 0 with two arms of length a to B and C; input D and
//! output E each connect to both B and C by bars of length b, which puts A,
//! D, E on the perpendicular bisector of B-C, hence collinear. Solving the
//! right triangles along that axis gives |D| = sqrt(a^2-s^2) +- sqrt(b^2-s^2)
//! and |E| the conjugate choice, where s is half the B-C separation, so
//! |D||E| = a^2 - b^2 always.
//!
//! Two degeneracies would break this and are excluded structurally:
//! - E folding onto D: a brace of length b joins the midpoints of B-D and
//!   C-E, satisfied only when E is on the opposite side of B-C from D;
//! - B and C coinciding: a cable of bound c from D to the rhombus center M
//!   (the interior joint of the brace) forces sqrt(b^2-c^2) <= s <= b.
//!
//! The cable bound also fixes the domain: the annulus with radii
//! sqrt(t^2+c^2) -+ c.



use num_complex::Complex64;

use super::{join, DomainDescriptor, Instance, InstanceKind, PlaceError, QfLinkage};
use crate::geom::{circle_intersection, Side};
use crate::linkage::{EdgeKind, Linkage, VertexId};

pub(super) fn append(
    l: &mut Linkage,
    prefix: &str,
    a: f64,
    b: f64,
    c: f64,
    din: &VertexId,
    eout: &VertexId,
) -> Result<(), PlaceError> {
    check_params(a, b, c)?;
    let va = join(prefix, "A");
    let vb = join(prefix, "B");
    let vc = join(prefix, "C");
    let p1 = join(prefix, "P1");
    let p2 = join(prefix, "P2");
    let m = join(prefix, "M");
    let k = join(prefix, "K");
    l.add_edge(va.clone(), vb.clone(), a)?;
    l.add_edge(va.clone(), vc.clone(), a)?;
    for hub in [din, eout] {
        l.add_edge(hub.clone(), vb.clone(), b)?;
        l.add_edge(hub.clone(), vc.clone(), b)?;
    }
    l.add_edge(p1.clone(), vb.clone(), b / 2.0)?;
    l.add_edge(p1.clone(), din.clone(), b / 2.0)?;
    l.add_edge(p2.clone(), vc.clone(), b / 2.0)?;
    l.add_edge(p2.clone(), eout.clone(), b / 2.0)?;
    l.add_edge_kind(p1.clone(), p2.clone(), b, EdgeKind::Brace)?;
    l.add_edge(m.clone(), p1, b / 2.0)?;
    l.add_edge(m.clone(), p2, b / 2.0)?;
    l.add_edge_kind(k.clone(), din.clone(), c / 2.0, EdgeKind::Cable)?;
    l.add_edge_kind(k, m, c / 2.0, EdgeKind::Cable)?;
    l.set_pin(va, Complex64::new(0.0, 0.0));
    Ok(())
}

fn check_params(a: f64, b: f64, c: f64) -> Result<(), PlaceError> {
    if !(0.0 < c && c < b && b < a) {
        return Err(PlaceError::Construction(format!(
            "peaucellier needs 0 < c < b < a, got a={a}, b={b}, c={c}"
        )));
    }
    Ok(())
}

/// Annulus radii of the certified domain.
pub fn annulus_radii(a: f64, b: f64, c: f64) -> (f64, f64) {
    let t2 = a * a - b * b;
    let mid = (t2 + c * c).sqrt();
    (mid - c, mid + c)
}

/// Placement of the bare inversor cell around a pivot at the origin.
pub(super) struct Cell {
    pub b: Complex64,
    pub c: Complex64,
    pub e: Complex64,
    pub p1: Complex64,
    pub p2: Complex64,
    pub m: Complex64,
    pub k: Complex64,
}

pub(super) fn place_cell(a: f64, b: f64, c: f64, z: Complex64, side: Side) -> Result<Cell, PlaceError> {
    let t2 = a * a - b * b;
    let r = z.norm();
    let (lo, hi) = annulus_radii(a, b, c);
    let slack = 1e-9 * hi;
    if !(lo - slack..=hi + slack).contains(&r) {
        return Err(PlaceError::Infeasible(format!(
            "|input| = {r} outside annulus [{lo}, {hi}]"
        )));
    }
    let axis = z / r;
    let normal = Complex64::new(0.0, 1.0) * axis;
    let u = (r * r + t2) / (2.0 * r);
    let s = (a * a - u * u).max(0.0).sqrt();
    let mid = u * axis;
    let vb = mid + side.sign() * s * normal;
    let vc = mid - side.sign() * s * normal;
    let e = (2.0 * u - r) * axis;
    let k = circle_intersection(z, c / 2.0, mid, c / 2.0, side).ok_or_else(|| {
        PlaceError::Degenerate(format!("cable anchor unreachable: |D-M| = {}", (z - mid).norm()))
    })?;
    Ok(Cell { b: vb, c: vc, e, p1: (vb + z) / 2.0, p2: (vc + e) / 2.0, m: mid, k })
}

pub(super) fn place(
    prefix: &str,
    a: f64,
    b: f64,
    c: f64,
    din: &VertexId,
    eout: &VertexId,
    z: Complex64,
    side: Side,
) -> Result<Vec<(VertexId, Complex64)>, PlaceError> {
    let cell = place_cell(a, b, c, z, side)?;
    Ok(vec![
        (join(prefix, "A"), Complex64::new(0.0, 0.0)),
        (join(prefix, "B"), cell.b),
        (join(prefix, "C"), cell.c),
        (din.clone(), z),
        (eout.clone(), cell.e),
        (join(prefix, "P1"), cell.p1),
        (join(prefix, "P2"), cell.p2),
        (join(prefix, "M"), cell.m),
        (join(prefix, "K"), cell.k),
    ])
}

/// Build a standalone inversor gadget. Parameters must satisfy 0 < c < b < a.
pub fn peaucellier(a: f64, b: f64, c: f64) -> Result<QfLinkage, PlaceError> {
    check_params(a, b, c)?;
    let din = VertexId::new("D");
    let eout = VertexId::new("E");
    let mut l = Linkage::new();
    append(&mut l, "", a, b, c, &din, &eout)?;
    let (lo, hi) = annulus_radii(a, b, c);
    Ok(QfLinkage {
        linkage: l,
        inputs: vec![din.clone()],
        outputs: vec![eout.clone()],
        domain: DomainDescriptor::annulus(lo, hi),
        plan: vec![Instance {
            kind: InstanceKind::Peaucellier { a, b, c },
            prefix: String::new(),
            io: vec![din, eout],
        }],
    })
}

/// Exact inversion map the gadget computes.
pub fn inversion(t2: f64, z: Complex64) -> Complex64 {
    t2 * z / z.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::BRANCHES;
    use crate::solver::{solve, InitPolicy, SolveOptions, SolveProblem};
    use rand::SeedableRng;

    #[test]
    fn annulus_radii_example() {
        let (lo, hi) = annulus_radii(5.0, 4.0, 3.0);
        assert!((lo - (18.0f64.sqrt() - 3.0)).abs() < 1e-12);
        assert!((hi - (18.0f64.sqrt() + 3.0)).abs() < 1e-12);
        assert!((lo - 1.2426).abs() < 1e-4);
        assert!((hi - 7.2426).abs() < 1e-4);
    }

    #[test]
    fn fixed_point_of_inversion() {
        // t^2 = 9, so 3 maps to 9*3/9 = 3.
        let g = peaucellier(5.0, 4.0, 3.0).unwrap();
        let out = g.apply(&[Complex64::new(3.0, 0.0)], Side::Plus).unwrap();
        assert!((out[0] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quasifunctional_with_product_law_and_collinearity() {
        let (a, b, c) = (5.0, 4.0, 3.0);
        let g = peaucellier(a, b, c).unwrap();
        let t2 = a * a - b * b;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let inputs = g.domain.sample(&mut rng);
            for side in BRANCHES {
                let r = g.forward_place(&inputs, side).unwrap();
                assert!(r.satisfies(&g.linkage, crate::TOL_EXACT));
                let d = r.position(&"D".into());
                let e = r.position(&"E".into());
                assert!((e - inversion(t2, inputs[0])).norm() < 1e-9);
                assert!((d.norm() * e.norm() - t2).abs() < 1e-9);
                assert!(r.collinearity_residual(&"A".into(), &"D".into(), &"E".into()) < 1e-8);
            }
        }
    }

    #[test]
    fn inner_boundary_has_taut_cable() {
        let (a, b, c) = (5.0, 4.0, 3.0);
        let g = peaucellier(a, b, c).unwrap();
        let (lo, _) = annulus_radii(a, b, c);
        let r = g.forward_place(&[Complex64::new(lo, 0.0)], Side::Plus).unwrap();
        let d = r.position(&"D".into());
        let m = r.position(&"M".into());
        // Cable taut: |D-M| = c, equivalently s at its minimum sqrt(b^2-c^2).
        assert!(((d - m).norm() - c).abs() < 1e-9);
        let s = (r.position(&"B".into()) - r.position(&"C".into())).norm() / 2.0;
        assert!((s - (b * b - c * c).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn solver_found_realizations_obey_product_law() {
        // |2+i| is inside the annulus; restart until a basin is found.
        let (a, b, c) = (5.0, 4.0, 3.0);
        let g = peaucellier(a, b, c).unwrap();
        let mut found = 0;
        for seed in 0..40u64 {
            let res = solve(
                &SolveProblem::new(&g.linkage, InitPolicy::Seeded(seed))
                    .fix("D".into(), Complex64::new(2.0, 1.0)),
                &SolveOptions::default(),
            );
            if let Some(r) = res.realization.filter(|_| res.deep) {
                let prod = r.position(&"D".into()).norm() * r.position(&"E".into()).norm();
                assert!((prod - 9.0).abs() < 1e-6, "product {prod}");
                found += 1;
            }
        }
        assert!(found >= 3, "only {found} of 40 restarts converged");
    }

    #[test]
    fn outside_annulus_is_infeasible() {
        let g = peaucellier(5.0, 4.0, 3.0).unwrap();
        assert!(matches!(
            g.forward_place(&[Complex64::new(0.5, 0.0)], Side::Plus),
            Err(PlaceError::Infeasible(_))
        ));
        assert!(matches!(
            g.forward_place(&[Complex64::new(8.0, 0.0)], Side::Plus),
            Err(PlaceError::Infeasible(_))
        ));
    }

    #[test]
    fn parameter_ordering_enforced() {
        assert!(peaucellier(4.0, 5.0, 3.0).is_err());
        assert!(peaucellier(5.0, 3.0, 4.0).is_err());
        assert!(peaucellier(5.0, 4.0, 0.0).is_err());
    }
}
