//! Parameterized gadget constructions.
//!
//! A gadget is a linkage packaged with ordered input and output vertices, a
//! certified input domain, and an exact forward-placement rule: given input
//! positions inside the domain (and a branch choice for the discrete
//! ambiguities), placement produces a full realization whose outputs equal
//! the gadget's function of its inputs. Placement is the constructive
//! witness of quasifunctionality; the generic solver cross-checks it.
//!
//! The internal vertex layouts are reconstructed from the functional
//! contracts (parallelism, collinearity, length and domain relations) and
//! certified behaviorally by the verification suite.

mod conjugation;
mod pantograph;
mod peaucellier;
mod squaring;
mod straightline;

pub use conjugation::conjugation;
pub use pantograph::{pantograph, PantographMode};
pub use peaucellier::{annulus_radii, inversion, peaucellier};
pub use squaring::{inversion_stage_margins, squaring};
pub use straightline::{straight_line, DriveArc, StraightLine};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{sample_annulus, sample_disk, unit, Side};
use crate::linkage::{EdgeKind, Linkage, LinkageError, Realization, VertexId};

/// `name` under an instance namespace; the empty prefix means top level.
pub(crate) fn join(prefix: &str, name: &str) -> VertexId {
    if prefix.is_empty() {
        VertexId::new(name)
    } else {
        VertexId::new(format!("{prefix}/{name}"))
    }
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// Magnitude interval for one input.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MagnitudeRange {
    pub lo: f64,
    /// May be infinite (unbounded input).
    pub hi: f64,
}

/// Joint constraint between two inputs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct JointBound {
    pub i: usize,
    pub j: usize,
    pub max_separation: f64,
}

/// Certified input domain of a gadget: per-input magnitude intervals plus
/// joint separation bounds, with the guaranteed polydisk radius when one
/// exists. Sampling draws from a finite window (`sample_hi`) even when the
/// mathematical domain is unbounded.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainDescriptor {
    pub inputs: Vec<MagnitudeRange>,
    pub joint: Vec<JointBound>,
    pub polydisk: Option<f64>,
    pub sample_hi: Vec<f64>,
}

impl DomainDescriptor {
    pub fn disk(n_inputs: usize, r: f64) -> Self {
        DomainDescriptor {
            inputs: vec![MagnitudeRange { lo: 0.0, hi: r }; n_inputs],
            joint: Vec::new(),
            polydisk: Some(r),
            sample_hi: vec![r; n_inputs],
        }
    }

    pub fn annulus(lo: f64, hi: f64) -> Self {
        DomainDescriptor {
            inputs: vec![MagnitudeRange { lo, hi }],
            joint: Vec::new(),
            polydisk: None,
            sample_hi: vec![hi],
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn contains(&self, inputs: &[Complex64]) -> bool {
        self.contains_tol(inputs, 1e-12)
    }

    fn contains_tol(&self, inputs: &[Complex64], tol: f64) -> bool {
        if inputs.len() != self.inputs.len() {
            return false;
        }
        let scale = |x: f64| x.abs().max(1.0) * tol;
        for (z, range) in inputs.iter().zip(&self.inputs) {
            let r = z.norm();
            if r < range.lo - scale(range.lo) || r > range.hi + scale(range.hi) {
                return false;
            }
        }
        for jb in &self.joint {
            let sep = (inputs[jb.i] - inputs[jb.j]).norm();
            if sep > jb.max_separation + scale(jb.max_separation) {
                return false;
            }
        }
        true
    }

    /// One interior sample; joint constraints by rejection.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<Complex64> {
        for _ in 0..10_000 {
            let candidate: Vec<Complex64> = self
                .inputs
                .iter()
                .zip(&self.sample_hi)
                .map(|(range, &hi)| {
                    if range.lo > 0.0 {
                        sample_annulus(rng, range.lo, hi)
                    } else {
                        sample_disk(rng, hi)
                    }
                })
                .collect();
            if self.joint.iter().all(|jb| {
                (candidate[jb.i] - candidate[jb.j]).norm() <= jb.max_separation
            }) {
                return candidate;
            }
        }
        // Joint constraints always admit coincident inputs.
        vec![Complex64::new(0.0, 0.0); self.inputs.len()]
    }

    /// A sample with one input pushed onto the declared boundary.
    pub fn sample_boundary<R: Rng>(&self, rng: &mut R, which: usize, outer: bool) -> Vec<Complex64> {
        let mut out = self.sample(rng);
        let range = self.inputs[which];
        let radius = if outer {
            if range.hi.is_finite() {
                range.hi
            } else {
                self.sample_hi[which]
            }
        } else {
            range.lo
        };
        out[which] = radius * unit(rng.gen::<f64>() * std::f64::consts::TAU);
        out
    }
}

// ---------------------------------------------------------------------------
// Instances and placement plans
// ---------------------------------------------------------------------------

/// One gadget occurrence inside a linkage: which construction, under which
/// vertex namespace, wired to which role vertices.
///
/// Role order is fixed per kind: pantographs use `[A, B, C]`, everything
/// else uses `[input, output]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    Identity,
    PantographAverage { a: f64 },
    PantographScaleUp { a: f64, c: f64 },
    PantographScaleDown { a: f64, c: f64 },
    PantographNegate { a: f64, c: f64 },
    Peaucellier { a: f64, b: f64, c: f64 },
    Squaring { r: f64 },
    Conjugation { r: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Instance {
    #[serde(flatten)]
    pub kind: InstanceKind,
    pub prefix: String,
    pub io: Vec<VertexId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaceError {
    #[error("inputs outside the gadget domain: {0}")]
    Infeasible(String),
    #[error("degenerate intermediate construction: {0}")]
    Degenerate(String),
    #[error("expected {expected} inputs, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("construction error: {0}")]
    Construction(String),
}

impl From<LinkageError> for PlaceError {
    fn from(e: LinkageError) -> Self {
        PlaceError::Construction(e.to_string())
    }
}

impl Instance {
    /// Append this instance's bars to `l`, creating internal vertices under
    /// the prefix. Role vertices are created (and pinned) as required.
    pub fn append_to(&self, l: &mut Linkage) -> Result<(), PlaceError> {
        match self.kind {
            InstanceKind::Identity => {
                let [din, eout] = two(&self.io)?;
                append_identity(l, &self.prefix, &din, &eout)?;
            }
            InstanceKind::PantographAverage { a } => {
                pantograph::append(l, &self.prefix, a, 1.0, &self.io, None)?;
            }
            InstanceKind::PantographScaleUp { a, c } | InstanceKind::PantographScaleDown { a, c } => {
                pantograph::append(l, &self.prefix, a, c, &self.io, Some(0))?;
            }
            InstanceKind::PantographNegate { a, c } => {
                pantograph::append(l, &self.prefix, a, c, &self.io, Some(1))?;
            }
            InstanceKind::Peaucellier { a, b, c } => {
                let [din, eout] = two(&self.io)?;
                peaucellier::append(l, &self.prefix, a, b, c, &din, &eout)?;
            }
            InstanceKind::Squaring { r } => {
                let [din, eout] = two(&self.io)?;
                let plan = squaring::plan(&self.prefix, r, &din, &eout);
                squaring::append_consts(l, &self.prefix, r);
                for inst in &plan {
                    inst.append_to(l)?;
                }
            }
            InstanceKind::Conjugation { r } => {
                let [din, eout] = two(&self.io)?;
                conjugation::append(l, &self.prefix, r, &din, &eout)?;
            }
        }
        Ok(())
    }

    /// Place all vertices of this instance, reading already-known positions
    /// (inputs, pins) from `pos` and inserting the rest.
    pub fn place(
        &self,
        pos: &mut BTreeMap<VertexId, Complex64>,
        side: Side,
    ) -> Result<(), PlaceError> {
        let read = |pos: &BTreeMap<VertexId, Complex64>, v: &VertexId| -> Result<Complex64, PlaceError> {
            pos.get(v)
                .copied()
                .ok_or_else(|| PlaceError::Construction(format!("unplaced vertex {v}")))
        };
        match self.kind {
            InstanceKind::Identity => {
                let [din, eout] = two(&self.io)?;
                let z = read(pos, &din)?;
                place_identity(pos, &self.prefix, &eout, z, side);
            }
            InstanceKind::PantographAverage { a } => {
                pantograph::place_average(pos, &self.prefix, a, &self.io, side)?;
            }
            InstanceKind::PantographScaleUp { a, c } => {
                pantograph::place_scale_up(pos, &self.prefix, a, c, &self.io, side)?;
            }
            InstanceKind::PantographScaleDown { a, c } => {
                pantograph::place_scale_down(pos, &self.prefix, a, c, &self.io, side)?;
            }
            InstanceKind::PantographNegate { a, c } => {
                pantograph::place_negate(pos, &self.prefix, a, c, &self.io, side)?;
            }
            InstanceKind::Peaucellier { a, b, c } => {
                let [din, eout] = two(&self.io)?;
                let z = read(pos, &din)?;
                let placed = peaucellier::place(&self.prefix, a, b, c, &din, &eout, z, side)?;
                pos.extend(placed);
            }
            InstanceKind::Squaring { r } => {
                let [din, eout] = two(&self.io)?;
                squaring::place_consts(pos, &self.prefix, r);
                for inst in squaring::plan(&self.prefix, r, &din, &eout) {
                    inst.place(pos, side)?;
                }
            }
            InstanceKind::Conjugation { r } => {
                let [din, eout] = two(&self.io)?;
                let z = read(pos, &din)?;
                let placed = conjugation::place(&self.prefix, r, &din, &eout, z, side)?;
                pos.extend(placed);
            }
        }
        Ok(())
    }
}

fn two(io: &[VertexId]) -> Result<[VertexId; 2], PlaceError> {
    if io.len() != 2 {
        return Err(PlaceError::WrongArity { expected: 2, got: io.len() });
    }
    Ok([io[0].clone(), io[1].clone()])
}

// ---------------------------------------------------------------------------
// Quasifunctional linkages
// ---------------------------------------------------------------------------

/// A linkage with ordered input/output vertices, a certified domain and a
/// deterministic forward-placement plan.
#[derive(Debug, Clone, PartialEq)]
pub struct QfLinkage {
    pub linkage: Linkage,
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
    pub domain: DomainDescriptor,
    /// Gadget instances in dependency order; running their placers in
    /// sequence realizes the whole linkage.
    pub plan: Vec<Instance>,
}

/// Discrete branch choices for one forward placement. The same orientation
/// bit is broadcast to every instance; outputs are branch-independent, which
/// is exactly the quasifunctionality property the verifier checks.
pub const BRANCHES: [Side; 2] = [Side::Plus, Side::Minus];

impl QfLinkage {
    /// Deterministic forward placement: inputs plus a branch choice produce
    /// a full realization with outputs at the gadget's function value.
    pub fn forward_place(&self, inputs: &[Complex64], side: Side) -> Result<Realization, PlaceError> {
        if inputs.len() != self.inputs.len() {
            return Err(PlaceError::WrongArity { expected: self.inputs.len(), got: inputs.len() });
        }
        if !self.domain.contains(inputs) {
            return Err(PlaceError::Infeasible(format!(
                "inputs {:?} outside declared domain",
                inputs.iter().map(|z| z.norm()).collect::<Vec<_>>()
            )));
        }
        let mut pos: BTreeMap<VertexId, Complex64> = self.linkage.pins().clone();
        for (v, &z) in self.inputs.iter().zip(inputs) {
            pos.insert(v.clone(), z);
        }
        for inst in &self.plan {
            inst.place(&mut pos, side)?;
        }
        Ok(Realization::new(pos))
    }

    /// Output positions for given inputs, via forward placement.
    pub fn apply(&self, inputs: &[Complex64], side: Side) -> Result<Vec<Complex64>, PlaceError> {
        let r = self.forward_place(inputs, side)?;
        Ok(self.outputs.iter().map(|v| r.position(v)).collect())
    }
}

/// Standalone forward placement, matching the operation set of this module.
pub fn forward_place(
    g: &QfLinkage,
    inputs: &[Complex64],
    side: Side,
) -> Result<Realization, PlaceError> {
    g.forward_place(inputs, side)
}

// ---------------------------------------------------------------------------
// Identity gadget
// ---------------------------------------------------------------------------

/// Spoke length that puts the hub of the identity gadget at the barycenter
/// of its unit triangle: the circumradius 1/sqrt(3).
pub const IDENTITY_SPOKE: f64 = 0.577_350_269_189_625_8;

fn append_identity(
    l: &mut Linkage,
    prefix: &str,
    din: &VertexId,
    eout: &VertexId,
) -> Result<(), LinkageError> {
    let a = join(prefix, "A");
    let b = join(prefix, "B");
    let c = join(prefix, "C");
    l.add_edge(a.clone(), b.clone(), 1.0)?;
    l.add_edge(b.clone(), c.clone(), 1.0)?;
    l.add_edge(a.clone(), c.clone(), 1.0)?;
    for hub in [din, eout] {
        for corner in [&a, &b, &c] {
            l.add_edge(hub.clone(), corner.clone(), IDENTITY_SPOKE)?;
        }
    }
    Ok(())
}

fn place_identity(
    pos: &mut BTreeMap<VertexId, Complex64>,
    prefix: &str,
    eout: &VertexId,
    z: Complex64,
    side: Side,
) {
    let third = std::f64::consts::TAU / 3.0;
    for (k, name) in ["A", "B", "C"].iter().enumerate() {
        pos.insert(join(prefix, name), z + IDENTITY_SPOKE * unit(side.sign() * third * k as f64));
    }
    pos.insert(eout.clone(), z);
}

/// The trivial-map gadget with distinct input and output vertices: a unit
/// triangle whose three corners are all spoke-joined to both the input hub
/// and the output hub. A planar point at spoke distance from all three
/// corners is unique (the circumcenter), so both hubs coincide in every
/// realization and the output always equals the input. Domain: all of C.
pub fn identity_gadget() -> QfLinkage {
    let mut l = Linkage::new();
    let din = VertexId::new("D");
    let eout = VertexId::new("E");
    append_identity(&mut l, "", &din, &eout).expect("identity gadget construction");
    let domain = DomainDescriptor {
        inputs: vec![MagnitudeRange { lo: 0.0, hi: f64::INFINITY }],
        joint: Vec::new(),
        polydisk: Some(f64::INFINITY),
        sample_hi: vec![10.0],
    };
    QfLinkage {
        linkage: l,
        inputs: vec![din.clone()],
        outputs: vec![eout.clone()],
        domain,
        plan: vec![Instance { kind: InstanceKind::Identity, prefix: String::new(), io: vec![din, eout] }],
    }
}

// ---------------------------------------------------------------------------
// Interior joints, cables, telescopes, rigidified parallelograms
// ---------------------------------------------------------------------------

/// Add an interior joint on the existing edge `u`-`v` at fraction `at` from
/// `u`. The joint's two bars satisfy the triangle inequality with equality,
/// which forces it onto the segment in every realization.
pub fn midpoint_joint(
    l: &Linkage,
    u: &VertexId,
    v: &VertexId,
    at: f64,
) -> Result<(Linkage, VertexId), LinkageError> {
    if !(at > 0.0 && at < 1.0) {
        return Err(LinkageError::BadFraction(at));
    }
    let edge = l
        .edge_between(u, v)
        .ok_or_else(|| LinkageError::NoSuchEdge(u.clone(), v.clone()))?;
    let len = edge.len;
    let mut out = l.clone();
    let joint = fresh_joint_name(&out, u, v);
    out.add_edge(joint.clone(), u.clone(), at * len)?;
    out.add_edge(joint.clone(), v.clone(), (1.0 - at) * len)?;
    Ok((out, joint))
}

fn fresh_joint_name(l: &Linkage, u: &VertexId, v: &VertexId) -> VertexId {
    let base = format!("{u}~{v}");
    let mut name = VertexId::new(base.clone());
    let mut n = 1;
    while l.has_vertex(&name) {
        name = VertexId::new(format!("{base}.{n}"));
        n += 1;
    }
    name
}

/// Constrain |u - v| <= b with a two-bar chain through an auxiliary vertex
/// that marker sets ignore.
pub fn cable(l: &Linkage, u: &VertexId, v: &VertexId, b: f64) -> Result<Linkage, LinkageError> {
    if !(b > 0.0) {
        return Err(LinkageError::BadParameter(format!("cable bound must be positive, got {b}")));
    }
    two_bar_chain(l, u, v, b / 2.0, b / 2.0)
}

/// Constrain |u - v| to the interval [a, b] (0 < a < b) with a two-bar chain
/// of lengths (a+b)/2 and (b-a)/2.
pub fn telescope(l: &Linkage, u: &VertexId, v: &VertexId, a: f64, b: f64) -> Result<Linkage, LinkageError> {
    if !(0.0 < a && a < b) {
        return Err(LinkageError::BadParameter(format!(
            "telescope needs 0 < a < b, got a={a}, b={b}"
        )));
    }
    two_bar_chain(l, u, v, (a + b) / 2.0, (b - a) / 2.0)
}

fn two_bar_chain(
    l: &Linkage,
    u: &VertexId,
    v: &VertexId,
    c: f64,
    d: f64,
) -> Result<Linkage, LinkageError> {
    for w in [u, v] {
        if !l.has_vertex(w) {
            return Err(LinkageError::UnknownVertex(w.clone()));
        }
    }
    let mut out = l.clone();
    let aux = fresh_joint_name(&out, u, v);
    out.add_edge_kind(aux.clone(), u.clone(), c, EdgeKind::Cable)?;
    out.add_edge_kind(aux.clone(), v.clone(), d, EdgeKind::Cable)?;
    Ok(out)
}

/// Four-bar cycle with opposite sides `side1`, `side2`, braced by an edge of
/// length `side2` between interior joints at the midpoints of the two
/// `side1` sides. The brace admits only the parallelogram branch; the folded
/// (anti-parallelogram) realizations violate it.
pub fn rigidified_parallelogram(side1: f64, side2: f64) -> Result<Linkage, LinkageError> {
    if !(side1 > 0.0 && side2 > 0.0) {
        return Err(LinkageError::BadParameter("parallelogram sides must be positive".into()));
    }
    let mut l = Linkage::new();
    l.add_edge("P0", "P1", side1)?;
    l.add_edge("P1", "P2", side2)?;
    l.add_edge("P2", "P3", side1)?;
    l.add_edge("P3", "P0", side2)?;
    let (l, m01) = midpoint_joint(&l, &"P0".into(), &"P1".into(), 0.5)?;
    let (mut l, m23) = midpoint_joint(&l, &"P2".into(), &"P3".into(), 0.5)?;
    l.add_edge_kind(m01, m23, side2, EdgeKind::Brace)?;
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{sample_configurations, solve, InitPolicy, SolveOptions, SolveProblem, SolveStatus};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_spoke_is_circumradius() {
        // The unique planar point equidistant from the corners of a unit
        // equilateral triangle is the circumcenter, at distance 1/sqrt(3).
        let verts = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.75f64.sqrt())];
        let center = c(0.5, 0.25 / 0.75f64.sqrt());
        for v in verts {
            assert!(((center - v).norm() - IDENTITY_SPOKE).abs() < 1e-12);
            assert!(((center - v).norm() - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_forward_place_both_branches() {
        let g = identity_gadget();
        let z = c(2.0, 1.0);
        for side in BRANCHES {
            let r = g.forward_place(&[z], side).unwrap();
            assert!((r.position(&"E".into()) - z).norm() < 1e-12);
            assert!(r.satisfies(&g.linkage, crate::TOL_EXACT));
        }
    }

    #[test]
    fn identity_sampled_configurations_stay_diagonal() {
        let g = identity_gadget();
        // The configuration space is a single isometry orbit, so isometry
        // deduplication leaves one representative; it must sit on the
        // diagonal.
        let samples = sample_configurations(&g.linkage, 60, 11);
        assert_eq!(samples.len(), 1);
        for r in &samples {
            let d = r.position(&"D".into());
            let e = r.position(&"E".into());
            assert!((d - e).norm() < crate::TOL_SOLVE, "off-diagonal: {d} vs {e}");
        }
        // Across the plane: fix the input anywhere, the output follows.
        for z in [c(3.0, 4.0), c(-2.0, 0.5), c(0.0, -7.0)] {
            let r = (0..20u64)
                .find_map(|seed| {
                    let problem =
                        SolveProblem::new(&g.linkage, InitPolicy::Seeded(seed)).fix("D".into(), z);
                    solve(&problem, &SolveOptions::default()).realization
                })
                .expect("identity gadget realizable everywhere");
            assert!((r.position(&"E".into()) - z).norm() < crate::TOL_SOLVE);
        }
    }

    #[test]
    fn midpoint_joint_lengths_and_collinearity() {
        let mut l = Linkage::new();
        l.add_edge("A", "B", 1.0).unwrap();
        let (l, j) = midpoint_joint(&l, &"A".into(), &"B".into(), 0.5).unwrap();
        assert!((l.edge_between(&j, &"A".into()).unwrap().len - 0.5).abs() < 1e-12);
        assert!((l.edge_between(&j, &"B".into()).unwrap().len - 0.5).abs() < 1e-12);
        let (l2, j2) = midpoint_joint(&l, &"A".into(), &"B".into(), 0.25).unwrap();
        assert!((l2.edge_between(&j2, &"A".into()).unwrap().len - 0.25).abs() < 1e-12);
        assert!((l2.edge_between(&j2, &"B".into()).unwrap().len - 0.75).abs() < 1e-12);

        // Sampled realizations keep the joint on the segment.
        let pinned = l2
            .pin(&"A".into(), c(0.0, 0.0))
            .unwrap();
        for r in sample_configurations(&pinned, 40, 3) {
            assert!(r.collinearity_residual(&"A".into(), &j, &"B".into()) < crate::TOL_SOLVE * 10.0);
            assert!(r.collinearity_residual(&"A".into(), &j2, &"B".into()) < crate::TOL_SOLVE * 10.0);
        }
    }

    #[test]
    fn midpoint_joint_rejects_bad_fraction() {
        let mut l = Linkage::new();
        l.add_edge("A", "B", 1.0).unwrap();
        assert!(midpoint_joint(&l, &"A".into(), &"B".into(), 0.0).is_err());
        assert!(midpoint_joint(&l, &"A".into(), &"B".into(), 1.0).is_err());
        assert!(midpoint_joint(&l, &"A".into(), &"C".into(), 0.5).is_err());
    }

    #[test]
    fn cable_feasibility_matches_bound() {
        let mut base = Linkage::new();
        base.add_vertex("U");
        base.add_vertex("V");
        let base = base.pin(&"U".into(), c(0.0, 0.0)).unwrap();
        let with_cable = cable(&base, &"U".into(), &"V".into(), 2.0).unwrap();

        // |U-V| = 1.5 admits a placement of the auxiliary vertex...
        let ok = with_cable.pin(&"V".into(), c(1.5, 0.0)).unwrap();
        let res = solve(&SolveProblem::new(&ok, InitPolicy::Seeded(0)), &SolveOptions::default());
        assert_eq!(res.status, SolveStatus::Converged);

        // ...but |U-V| = 2.5 does not.
        let too_far = with_cable.pin(&"V".into(), c(2.5, 0.0)).unwrap();
        let mut converged = false;
        for seed in 0..10 {
            let res = solve(&SolveProblem::new(&too_far, InitPolicy::Seeded(seed)), &SolveOptions::default());
            converged |= res.status == SolveStatus::Converged;
        }
        assert!(!converged);
    }

    #[test]
    fn telescope_bar_lengths() {
        let mut base = Linkage::new();
        base.add_vertex("U");
        base.add_vertex("V");
        let l = telescope(&base, &"U".into(), &"V".into(), 1.0, 3.0).unwrap();
        let mut lens: Vec<f64> = l.edges().iter().map(|e| e.len).collect();
        lens.sort_unstable_by(f64::total_cmp);
        assert_eq!(lens, vec![1.0, 2.0]);
        assert!(telescope(&base, &"U".into(), &"V".into(), 3.0, 1.0).is_err());
        assert!(telescope(&base, &"U".into(), &"V".into(), 0.0, 1.0).is_err());
    }

    #[test]
    fn telescope_degenerate_minimum_is_feasible() {
        let mut base = Linkage::new();
        base.add_vertex("U");
        base.add_vertex("V");
        let base = base.pin(&"U".into(), c(0.0, 0.0)).unwrap();
        let l = telescope(&base, &"U".into(), &"V".into(), 1.0, 3.0).unwrap();
        // |U-V| = a exactly: the chain is collinear and uniquely placed.
        let at_min = l.pin(&"V".into(), c(1.0, 0.0)).unwrap();
        let res = solve(&SolveProblem::new(&at_min, InitPolicy::Seeded(4)), &SolveOptions::default());
        assert_eq!(res.status, SolveStatus::Converged);
        let inside = l.pin(&"V".into(), c(0.5, 0.0)).unwrap();
        let mut converged = false;
        for seed in 0..10 {
            converged |= solve(&SolveProblem::new(&inside, InitPolicy::Seeded(seed)), &SolveOptions::default())
                .status
                == SolveStatus::Converged;
        }
        assert!(!converged, "|U-V| < a must be infeasible");
    }

    #[test]
    fn parallelogram_brace_length_unit_square() {
        let l = rigidified_parallelogram(1.0, 1.0).unwrap();
        let brace: Vec<_> = l.edges().iter().filter(|e| e.kind == EdgeKind::Brace).collect();
        assert_eq!(brace.len(), 1);
        assert!((brace[0].len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallelogram_sampled_sides_parallel() {
        let l = rigidified_parallelogram(1.0, 2.0).unwrap();
        let l = l.pin(&"P0".into(), c(0.0, 0.0)).unwrap();
        let l = l.pin(&"P1".into(), c(1.0, 0.0)).unwrap();
        let samples = sample_configurations(&l, 100, 17);
        assert!(samples.len() > 20);
        for r in &samples {
            let p0 = r.position(&"P0".into());
            let p1 = r.position(&"P1".into());
            let p2 = r.position(&"P2".into());
            let p3 = r.position(&"P3".into());
            let residual = crate::geom::cross(p1 - p0, p2 - p3).abs();
            assert!(residual < 1e-4, "opposite sides not parallel: {residual}");
        }
    }

    #[test]
    fn parallelogram_folds_without_brace() {
        let braced = rigidified_parallelogram(1.0, 2.0).unwrap();
        let mut unbraced = Linkage::new();
        for e in braced.edges().iter().filter(|e| e.kind != EdgeKind::Brace) {
            unbraced.add_edge(e.u.clone(), e.v.clone(), e.len).unwrap();
        }
        let unbraced = unbraced.pin(&"P0".into(), c(0.0, 0.0)).unwrap();
        let unbraced = unbraced.pin(&"P1".into(), c(1.0, 0.0)).unwrap();
        let mut found_fold = false;
        for r in sample_configurations(&unbraced, 200, 23) {
            let p0 = r.position(&"P0".into());
            let p1 = r.position(&"P1".into());
            let p2 = r.position(&"P2".into());
            let p3 = r.position(&"P3".into());
            if crate::geom::cross(p1 - p0, p2 - p3).abs() > 0.1 {
                found_fold = true;
                break;
            }
        }
        assert!(found_fold, "solver should reach anti-parallelogram branch without the brace");
    }

    #[test]
    fn domain_descriptor_sampling_respects_bounds() {
        use rand::SeedableRng;
        let d = DomainDescriptor::annulus(1.0, 2.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = d.sample(&mut rng);
            assert!(d.contains(&s));
            let r = s[0].norm();
            assert!((1.0..=2.0).contains(&r));
        }
        let b = d.sample_boundary(&mut rng, 0, false);
        assert!((b[0].norm() - 1.0).abs() < 1e-12);
    }
}
