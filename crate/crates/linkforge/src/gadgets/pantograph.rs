//! The pantograph: one construction, four quasifunctional modes.
//!
//! A rigidified parallelogram D-E-B-F with two extended sides. Interior
//! joints force E onto segment D..A and F onto segment D..C, and the
//! midpoint brace admits only the parallelogram branch, so in every
//! realization the three distinguished vertices satisfy the affine relation
//!
//! ```text
//! C = (1+c)*B - c*A        (A, B, C collinear)
//! ```
//!
//! Reading different vertices as input/output and pinning one of them turns
//! the single relation into averaging, scaling up, scaling down or negation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{join, DomainDescriptor, Instance, InstanceKind, JointBound, MagnitudeRange, PlaceError, QfLinkage};
use crate::geom::{circle_intersection, Side};
use crate::linkage::{EdgeKind, Linkage, LinkageError, VertexId};

/// Which quasifunctional reading of the pantograph to take.
///
/// With arm ratio `c` and base length `a`:
/// - `Average` (forces c = 1): inputs A, C; output B = (A+C)/2;
///   domain |A - C| <= 4a.
/// - `ScaleUp`: A pinned at 0, input B, output C = (1+c)B; domain |B| <= 2a.
/// - `ScaleDown`: A pinned at 0, input C, output B = C/(1+c);
///   domain |C| <= 2a(1+c).
/// - `Negate`: B pinned at 0, input A, output C = -cA; domain |A| <= 2a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PantographMode {
    Average,
    ScaleUp,
    ScaleDown,
    Negate,
}

/// Append the pantograph bars for roles `io = [A, B, C]`, with internal
/// vertices under `prefix`. `pin_role` optionally pins io[role] at 0.
pub(super) fn append(
    l: &mut Linkage,
    prefix: &str,
    a: f64,
    c: f64,
    io: &[VertexId],
    pin_role: Option<usize>,
) -> Result<(), PlaceError> {
    if !(a > 0.0 && c > 0.0) {
        return Err(PlaceError::Construction(format!(
            "pantograph parameters must be positive, got a={a}, c={c}"
        )));
    }
    if io.len() != 3 {
        return Err(PlaceError::WrongArity { expected: 3, got: io.len() });
    }
    let (va, vb, vc) = (&io[0], &io[1], &io[2]);
    let d = join(prefix, "D");
    let e = join(prefix, "E");
    let f = join(prefix, "F");
    let m1 = join(prefix, "M1");
    let m2 = join(prefix, "M2");
    let p = c * a;
    let q = a;
    let add = |l: &mut Linkage, u: &VertexId, v: &VertexId, len: f64| -> Result<(), LinkageError> {
        l.add_edge(u.clone(), v.clone(), len)
    };
    add(l, &d, &e, p)?;
    add(l, &e, vb, q)?;
    add(l, vb, &f, p)?;
    add(l, &f, &d, q)?;
    add(l, &m1, &d, p / 2.0)?;
    add(l, &m1, &e, p / 2.0)?;
    add(l, &m2, vb, p / 2.0)?;
    add(l, &m2, &f, p / 2.0)?;
    l.add_edge_kind(m1.clone(), m2.clone(), q, EdgeKind::Brace)?;
    add(l, &e, va, a)?;
    add(l, &d, va, a * (1.0 + c))?;
    add(l, &f, vc, c * a)?;
    add(l, &d, vc, a * (1.0 + c))?;
    if let Some(role) = pin_role {
        l.set_pin(io[role].clone(), Complex64::new(0.0, 0.0));
    }
    Ok(())
}

struct Frame {
    d: Complex64,
    e: Complex64,
    f: Complex64,
    b: Complex64,
}

/// Internal placement shared by all modes once A, B and the apex D are known.
fn finish(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    io: &[VertexId],
    a_pos: Complex64,
    b_pos: Complex64,
    c_pos: Complex64,
    frame: Frame,
) {
    pos.insert(io[0].clone(), a_pos);
    pos.insert(io[1].clone(), b_pos);
    pos.insert(io[2].clone(), c_pos);
    pos.insert(join(prefix, "D"), frame.d);
    pos.insert(join(prefix, "E"), frame.e);
    pos.insert(join(prefix, "F"), frame.f);
    pos.insert(join(prefix, "M1"), (frame.d + frame.e) / 2.0);
    pos.insert(join(prefix, "M2"), (frame.b + frame.f) / 2.0);
}

fn apex(
    z: Complex64,
    w: Complex64,
    arm: f64,
    side: Side,
) -> Result<Complex64, PlaceError> {
    circle_intersection(z, arm, w, arm, side).ok_or_else(|| {
        PlaceError::Degenerate(format!("pantograph arms of length {arm} cannot span {}", (z - w).norm()))
    })
}

fn read(pos: &BTreeMap<VertexId, Complex64>, v: &VertexId) -> Result<Complex64, PlaceError> {
    pos.get(v).copied().ok_or_else(|| PlaceError::Construction(format!("unplaced vertex {v}")))
}

pub(super) fn place_average(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    a: f64,
    io: &[VertexId],
    side: Side,
) -> Result<(), PlaceError> {
    let (z, w) = (read(pos, &io[0])?, read(pos, &io[2])?);
    let c = 1.0;
    let d = apex(z, w, a * (1.0 + c), side)?;
    let e = d + (z - d) * (c / (1.0 + c));
    let f = d + (w - d) / (1.0 + c);
    let b = e + f - d;
    finish(pos, prefix, io, z, b, w, Frame { d, e, f, b });
    Ok(())
}

pub(super) fn place_scale_up(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    a: f64,
    c: f64,
    io: &[VertexId],
    side: Side,
) -> Result<(), PlaceError> {
    let (a_pos, b_pos) = (read(pos, &io[0])?, read(pos, &io[1])?);
    let e = apex(a_pos, b_pos, a, side)?;
    let d = a_pos + (1.0 + c) * (e - a_pos);
    let f = b_pos + d - e;
    let c_pos = a_pos + (1.0 + c) * (b_pos - a_pos);
    finish(pos, prefix, io, a_pos, b_pos, c_pos, Frame { d, e, f, b: b_pos });
    Ok(())
}

pub(super) fn place_scale_down(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    a: f64,
    c: f64,
    io: &[VertexId],
    side: Side,
) -> Result<(), PlaceError> {
    let (a_pos, c_pos) = (read(pos, &io[0])?, read(pos, &io[2])?);
    let d = apex(a_pos, c_pos, a * (1.0 + c), side)?;
    let e = a_pos + (d - a_pos) / (1.0 + c);
    let f = d + (c_pos - d) / (1.0 + c);
    let b = e + f - d;
    finish(pos, prefix, io, a_pos, b, c_pos, Frame { d, e, f, b });
    Ok(())
}

pub(super) fn place_negate(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    a: f64,
    c: f64,
    io: &[VertexId],
    side: Side,
) -> Result<(), PlaceError> {
    let (a_pos, b_pos) = (read(pos, &io[0])?, read(pos, &io[1])?);
    let e = apex(a_pos, b_pos, a, side)?;
    let d = (1.0 + c) * e - c * a_pos;
    let f = b_pos + d - e;
    let c_pos = (1.0 + c) * b_pos - c * a_pos;
    finish(pos, prefix, io, a_pos, b_pos, c_pos, Frame { d, e, f, b: b_pos });
    Ok(())
}

/// Build a standalone pantograph gadget in the given mode.
pub fn pantograph(mode: PantographMode, a: f64, c: f64) -> Result<QfLinkage, PlaceError> {
    if !(a > 0.0 && c > 0.0) {
        return Err(PlaceError::Construction(format!(
            "pantograph parameters must be positive, got a={a}, c={c}"
        )));
    }
    let c = if mode == PantographMode::Average { 1.0 } else { c };
    let io: Vec<VertexId> = ["A", "B", "C"].into_iter().map(VertexId::new).collect();
    let (kind, pin_role, inputs, outputs, domain) = match mode {
        PantographMode::Average => (
            InstanceKind::PantographAverage { a },
            None,
            vec![io[0].clone(), io[2].clone()],
            vec![io[1].clone()],
            DomainDescriptor {
                inputs: vec![MagnitudeRange { lo: 0.0, hi: f64::INFINITY }; 2],
                joint: vec![JointBound { i: 0, j: 1, max_separation: 4.0 * a }],
                polydisk: Some(2.0 * a),
                sample_hi: vec![3.0 * a; 2],
            },
        ),
        PantographMode::ScaleUp => (
            InstanceKind::PantographScaleUp { a, c },
            Some(0),
            vec![io[1].clone()],
            vec![io[2].clone()],
            DomainDescriptor::disk(1, 2.0 * a),
        ),
        PantographMode::ScaleDown => (
            InstanceKind::PantographScaleDown { a, c },
            Some(0),
            vec![io[2].clone()],
            vec![io[1].clone()],
            DomainDescriptor::disk(1, 2.0 * a * (1.0 + c)),
        ),
        PantographMode::Negate => (
            InstanceKind::PantographNegate { a, c },
            Some(1),
            vec![io[0].clone()],
            vec![io[2].clone()],
            DomainDescriptor::disk(1, 2.0 * a),
        ),
    };
    let mut l = Linkage::new();
    append(&mut l, "", a, c, &io, pin_role)?;
    Ok(QfLinkage {
        linkage: l,
        inputs,
        outputs,
        domain,
        plan: vec![Instance { kind, prefix: String::new(), io }],
    })
}
