//! Lower polynomial expressions (with conjugation) into quasifunctional
//! linkages by gadget composition.
//!
//! Multiplication reduces to squares and averages through
//! z*w = ((z+w)/2)^2 - ((z-w)/2)^2; subtraction goes through negation; real
//! scalars pick the pantograph mode that covers them. Every gadget instance
//! is sized from an interval-arithmetic magnitude bound of its inputs so
//! that the certified domain covers the achievable values with at least a
//! 2x margin, recorded in the instantiation log.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Node, NodeId};
use crate::gadgets::{DomainDescriptor, Instance, InstanceKind, PlaceError, QfLinkage};
use crate::linkage::{Linkage, LinkageError, MarkerSet, VertexId};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("expression uses z{}, but only {declared} variables are declared", used + 1)]
    VarOutOfRange { used: usize, declared: usize },
    #[error("gadget construction failed: {0}")]
    Gadget(#[from] PlaceError),
    #[error("{0}")]
    Linkage(#[from] LinkageError),
}

/// One line of the instantiation log: which gadget was emitted for which
/// node, and the bound-vs-domain margin that justifies it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogEntry {
    pub node: NodeId,
    pub op: String,
    pub gadget: String,
    pub prefix: String,
    /// Upper bound on the relevant input magnitude (or separation).
    pub input_bound: f64,
    /// The instantiated gadget's certified bound for that quantity.
    pub domain_bound: f64,
    /// domain_bound / input_bound; at least 2 by construction.
    pub margin: f64,
}

/// A compiled expression: the gadget linkage, where each node's value lives,
/// and the sizing log.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub qf: QfLinkage,
    pub node_vertex: HashMap<NodeId, VertexId>,
    pub log: Vec<LogEntry>,
    pub n_vars: usize,
    pub radius: f64,
}

struct Lowerer<'e> {
    expr: &'e Expr,
    bounds: Vec<f64>,
    radius: f64,
    linkage: Linkage,
    plan: Vec<Instance>,
    log: Vec<LogEntry>,
    memo: HashMap<NodeId, VertexId>,
    const_memo: HashMap<(u64, u64), VertexId>,
    next: usize,
}

impl<'e> Lowerer<'e> {
    fn fresh_prefix(&mut self) -> String {
        let p = format!("g{}", self.next);
        self.next += 1;
        p
    }

    /// Sizing floor: keeps degenerate zero bounds (e.g. squaring a constant
    /// zero) from collapsing a gadget.
    fn padded(&self, b: f64) -> f64 {
        b.max(1e-6 * self.radius.max(1.0))
    }

    fn emit(&mut self, inst: Instance, entry: LogEntry) -> Result<VertexId, CompileError> {
        inst.append_to(&mut self.linkage)?;
        let out = match inst.kind {
            InstanceKind::Identity
            | InstanceKind::Peaucellier { .. }
            | InstanceKind::Squaring { .. }
            | InstanceKind::Conjugation { .. } => inst.io[1].clone(),
            InstanceKind::PantographAverage { .. } | InstanceKind::PantographScaleDown { .. } => {
                inst.io[1].clone()
            }
            InstanceKind::PantographScaleUp { .. } | InstanceKind::PantographNegate { .. } => {
                inst.io[2].clone()
            }
        };
        self.plan.push(inst);
        self.log.push(entry);
        Ok(out)
    }

    fn entry(
        &self,
        node: NodeId,
        op: &str,
        gadget: &str,
        prefix: &str,
        input: f64,
        domain: f64,
    ) -> LogEntry {
        LogEntry {
            node,
            op: op.to_owned(),
            gadget: gadget.to_owned(),
            prefix: prefix.to_owned(),
            input_bound: input,
            domain_bound: domain,
            margin: if input > 0.0 { domain / input } else { f64::INFINITY },
        }
    }

    fn const_vertex(&mut self, z: Complex64) -> VertexId {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.const_memo.get(&key) {
            return v.clone();
        }
        let v = VertexId::new(format!("c{}", self.const_memo.len()));
        self.linkage.set_pin(v.clone(), z);
        self.const_memo.insert(key, v.clone());
        v
    }

    /// (z + w) / 2 of two possibly aliased vertices.
    fn average(
        &mut self,
        node: NodeId,
        va: &VertexId,
        ba: f64,
        vb: &VertexId,
        bb: f64,
    ) -> Result<VertexId, CompileError> {
        if va == vb {
            return Ok(va.clone());
        }
        let p = self.fresh_prefix();
        let a = self.padded((ba + bb) / 2.0);
        let out = VertexId::new(format!("{p}/B"));
        let inst = Instance {
            kind: InstanceKind::PantographAverage { a },
            prefix: p.clone(),
            io: vec![va.clone(), out, vb.clone()],
        };
        let entry = self.entry(node, "average", "pantograph-average", &p, ba + bb, 4.0 * a);
        self.emit(inst, entry)
    }

    fn scale(
        &mut self,
        node: NodeId,
        v: &VertexId,
        b: f64,
        lambda: f64,
    ) -> Result<VertexId, CompileError> {
        if lambda == 0.0 {
            return Ok(self.const_vertex(Complex64::new(0.0, 0.0)));
        }
        let p = self.fresh_prefix();
        if (lambda - 1.0).abs() < 1e-15 {
            let out = VertexId::new(format!("{p}/E"));
            let inst =
                Instance { kind: InstanceKind::Identity, prefix: p.clone(), io: vec![v.clone(), out] };
            let entry = self.entry(node, "scale 1", "identity", &p, b, f64::INFINITY);
            return self.emit(inst, entry);
        }
        if lambda > 1.0 {
            let a = self.padded(b);
            let out = VertexId::new(format!("{p}/C"));
            let inst = Instance {
                kind: InstanceKind::PantographScaleUp { a, c: lambda - 1.0 },
                prefix: p.clone(),
                io: vec![VertexId::new(format!("{p}/A")), v.clone(), out],
            };
            let entry =
                self.entry(node, &format!("scale {lambda}"), "pantograph-scale-up", &p, b, 2.0 * a);
            return self.emit(inst, entry);
        }
        if lambda > 0.0 {
            let c = 1.0 / lambda - 1.0;
            let a = self.padded(b) * lambda;
            let out = VertexId::new(format!("{p}/B"));
            let inst = Instance {
                kind: InstanceKind::PantographScaleDown { a, c },
                prefix: p.clone(),
                io: vec![VertexId::new(format!("{p}/A")), out, v.clone()],
            };
            let entry = self.entry(
                node,
                &format!("scale {lambda}"),
                "pantograph-scale-down",
                &p,
                b,
                2.0 * a * (1.0 + c),
            );
            return self.emit(inst, entry);
        }
        let a = self.padded(b);
        let out = VertexId::new(format!("{p}/C"));
        let inst = Instance {
            kind: InstanceKind::PantographNegate { a, c: -lambda },
            prefix: p.clone(),
            io: vec![v.clone(), VertexId::new(format!("{p}/B")), out],
        };
        let entry = self.entry(node, &format!("scale {lambda}"), "pantograph-negate", &p, b, 2.0 * a);
        self.emit(inst, entry)
    }

    fn square(&mut self, node: NodeId, v: &VertexId, b: f64) -> Result<VertexId, CompileError> {
        let p = self.fresh_prefix();
        let r = self.padded(b) * 2.0;
        let out = VertexId::new(format!("{p}/out"));
        let inst =
            Instance { kind: InstanceKind::Squaring { r }, prefix: p.clone(), io: vec![v.clone(), out] };
        let entry = self.entry(node, "square", "squaring", &p, b, r);
        self.emit(inst, entry)
    }

    /// x + y = 2 * avg(x, y)
    fn add(
        &mut self,
        node: NodeId,
        va: &VertexId,
        ba: f64,
        vb: &VertexId,
        bb: f64,
    ) -> Result<VertexId, CompileError> {
        let mid = self.average(node, va, ba, vb, bb)?;
        self.scale(node, &mid, (ba + bb) / 2.0, 2.0)
    }

    fn lower(&mut self, id: NodeId) -> Result<VertexId, CompileError> {
        if let Some(v) = self.memo.get(&id) {
            return Ok(v.clone());
        }
        let v = match self.expr.nodes()[id] {
            Node::Var(i) => VertexId::new(format!("z{}", i + 1)),
            Node::ConstReal(x) => self.const_vertex(Complex64::new(x, 0.0)),
            Node::ConstComplex(z) => self.const_vertex(z),
            Node::Add(a, b) => {
                let (va, vb) = (self.lower(a)?, self.lower(b)?);
                let (ba, bb) = (self.bounds[a], self.bounds[b]);
                if va == vb {
                    self.scale(id, &va, ba, 2.0)?
                } else {
                    self.add(id, &va, ba, &vb, bb)?
                }
            }
            Node::Sub(a, b) => {
                let (va, vb) = (self.lower(a)?, self.lower(b)?);
                let (ba, bb) = (self.bounds[a], self.bounds[b]);
                if va == vb {
                    self.const_vertex(Complex64::new(0.0, 0.0))
                } else {
                    let nb = self.scale(id, &vb, bb, -1.0)?;
                    self.add(id, &va, ba, &nb, bb)?
                }
            }
            Node::Mul(a, b) => {
                let (va, vb) = (self.lower(a)?, self.lower(b)?);
                let (ba, bb) = (self.bounds[a], self.bounds[b]);
                if va == vb {
                    self.square(id, &va, ba)?
                } else {
                    // z*w = ((z+w)/2)^2 - ((z-w)/2)^2
                    let p = self.average(id, &va, ba, &vb, bb)?;
                    let nb = self.scale(id, &vb, bb, -1.0)?;
                    let q = self.average(id, &va, ba, &nb, bb)?;
                    let half = (ba + bb) / 2.0;
                    let sp = self.square(id, &p, half)?;
                    let sq = self.square(id, &q, half)?;
                    let sq_bound = half * half;
                    let nsq = self.scale(id, &sq, sq_bound, -1.0)?;
                    self.add(id, &sp, sq_bound, &nsq, sq_bound)?
                }
            }
            Node::ScaleReal(lambda, a) => {
                let va = self.lower(a)?;
                let ba = self.bounds[a];
                self.scale(id, &va, ba, lambda)?
            }
            Node::Square(a) => {
                let va = self.lower(a)?;
                let ba = self.bounds[a];
                self.square(id, &va, ba)?
            }
            Node::Conj(a) => {
                let va = self.lower(a)?;
                let ba = self.bounds[a];
                let p = self.fresh_prefix();
                let r = self.padded(ba) * 2.0;
                let out = VertexId::new(format!("{p}/D"));
                let inst = Instance {
                    kind: InstanceKind::Conjugation { r },
                    prefix: p.clone(),
                    io: vec![va.clone(), out],
                };
                let entry = self.entry(id, "conj", "conjugation", &p, ba, r);
                self.emit(inst, entry)?
            }
        };
        self.memo.insert(id, v.clone());
        Ok(v)
    }
}

/// Compile `e` into a quasifunctional linkage whose domain contains the
/// polydisk |z_i| <= radius.
pub fn compile(e: &Expr, n_vars: usize, radius: f64) -> Result<Compiled, CompileError> {
    if !(radius > 0.0) {
        return Err(CompileError::BadRadius(radius));
    }
    if let Some(used) = e.max_var() {
        if used >= n_vars {
            return Err(CompileError::VarOutOfRange { used, declared: n_vars });
        }
    }
    let mut lowerer = Lowerer {
        expr: e,
        bounds: e.magnitude_bounds(radius),
        radius,
        linkage: Linkage::new(),
        plan: Vec::new(),
        log: Vec::new(),
        memo: HashMap::new(),
        const_memo: HashMap::new(),
        next: 0,
    };
    let inputs: Vec<VertexId> = (0..n_vars)
        .map(|i| lowerer.linkage.add_vertex(format!("z{}", i + 1)))
        .collect();
    let mut out = lowerer.lower(e.root())?;
    // Inputs and outputs must be disjoint vertex sets; an identity gadget
    // separates them when the expression is a bare variable.
    if inputs.contains(&out) {
        let p = lowerer.fresh_prefix();
        let fresh = VertexId::new(format!("{p}/E"));
        let inst = Instance {
            kind: InstanceKind::Identity,
            prefix: p.clone(),
            io: vec![out.clone(), fresh],
        };
        let entry = lowerer.entry(
            e.root(),
            "pass-through",
            "identity",
            &p,
            lowerer.bounds[e.root()],
            f64::INFINITY,
        );
        out = lowerer.emit(inst, entry)?;
    }

    let mut node_vertex: HashMap<NodeId, VertexId> = lowerer.memo.clone();
    node_vertex.insert(e.root(), out.clone());
    Ok(Compiled {
        qf: QfLinkage {
            linkage: lowerer.linkage,
            inputs,
            outputs: vec![out],
            domain: DomainDescriptor::disk(n_vars, radius),
            plan: lowerer.plan,
        },
        node_vertex,
        log: lowerer.log,
        n_vars,
        radius,
    })
}

// ---------------------------------------------------------------------------
// Semialgebraic pipelines
// ---------------------------------------------------------------------------

/// Which coordinates of the algebraized system are original variables and
/// which are slack.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub n_original: usize,
    pub n_slack: usize,
}

impl ProjectionSpec {
    pub fn project(&self, point: &[Complex64]) -> Vec<Complex64> {
        point[..self.n_original].to_vec()
    }
}

/// Encode the basic semialgebraic set {p_i = 0, q_j >= 0, r_k > 0} as the
/// zero set of one polynomial over the original variables plus one slack
/// variable per inequality:
///
/// ```text
/// P = sum p_i^2 + sum (y_j^2 - q_j)^2 + sum (z_k^2 r_k - 1)^2
/// ```
///
/// Over real points the zero set of P projects exactly onto the basic set:
/// y_j^2 = q_j is solvable iff q_j >= 0, and z_k^2 r_k = 1 iff r_k > 0.
pub fn basic_semialgebraic_to_algebraic(
    equalities: &[Expr],
    nonnegatives: &[Expr],
    positives: &[Expr],
    n_vars: usize,
) -> (Expr, ProjectionSpec) {
    let mut p = Expr::new();
    let mut terms: Vec<NodeId> = Vec::new();
    for eq in equalities {
        let t = p.import(eq, eq.root(), 0);
        terms.push(p.square(t));
    }
    for (j, q) in nonnegatives.iter().enumerate() {
        let qv = p.import(q, q.root(), 0);
        let y = p.var(n_vars + j);
        let y2 = p.square(y);
        let diff = p.sub(y2, qv);
        terms.push(p.square(diff));
    }
    for (k, r) in positives.iter().enumerate() {
        let rv = p.import(r, r.root(), 0);
        let z = p.var(n_vars + nonnegatives.len() + k);
        let z2 = p.square(z);
        let prod = p.mul(z2, rv);
        let one = p.const_real(1.0);
        let diff = p.sub(prod, one);
        terms.push(p.square(diff));
    }
    let root = match terms.split_first() {
        None => p.const_real(0.0),
        Some((&first, rest)) => {
            let mut acc = first;
            for &t in rest {
                acc = p.add(acc, t);
            }
            acc
        }
    };
    p.set_root(root);
    (p, ProjectionSpec { n_original: n_vars, n_slack: nonnegatives.len() + positives.len() })
}

/// Linkage whose marker cloud samples the zero set of `p` inside the
/// polydisk: compile `p`, then pin the output at 0 so the inputs can only
/// take values where p vanishes.
#[derive(Debug, Clone)]
pub struct ZeroSetLinkage {
    pub linkage: Linkage,
    pub markers: MarkerSet,
    pub compiled: Compiled,
}

pub fn linkage_for_zero_set(p: &Expr, n_vars: usize, radius: f64) -> Result<ZeroSetLinkage, CompileError> {
    let compiled = compile(p, n_vars, radius)?;
    let pinned = compiled
        .qf
        .linkage
        .pin(&compiled.qf.outputs[0], Complex64::new(0.0, 0.0))?;
    Ok(ZeroSetLinkage {
        linkage: pinned,
        markers: MarkerSet::new(compiled.qf.inputs.clone()),
        compiled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::gadgets::BRANCHES;
    use crate::geom::{sample_disk, Side};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_sound(src: &str, n_vars: usize, radius: f64, samples: usize, tol: f64) {
        let e = parse(src).unwrap();
        let compiled = compile(&e, n_vars, radius).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..samples {
            let inputs: Vec<Complex64> =
                (0..n_vars).map(|_| sample_disk(&mut rng, radius)).collect();
            let want = e.eval(&inputs);
            for side in BRANCHES {
                let r = compiled.qf.forward_place(&inputs, side).unwrap();
                assert!(r.satisfies(&compiled.qf.linkage, crate::TOL_EXACT), "{src}: bad residual");
                let got = r.position(&compiled.qf.outputs[0]);
                assert!(
                    (got - want).norm() < tol,
                    "{src} at {inputs:?}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn square_matches_direct_evaluation() {
        assert_sound("z1^2", 1, 1.0, 200, 1e-9);
    }

    #[test]
    fn modulus_squared_is_real() {
        let e = parse("z1*conj(z1)").unwrap();
        let compiled = compile(&e, 1, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..150 {
            let z = sample_disk(&mut rng, 1.0);
            let r = compiled.qf.forward_place(&[z], Side::Plus).unwrap();
            let got = r.position(&compiled.qf.outputs[0]);
            assert!(got.im.abs() < 1e-9);
            assert!((got.re - z.norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn multiplication_reduction_is_exact() {
        assert_sound("z1*z2", 2, 1.0, 200, 1e-9);
    }

    #[test]
    fn identity_expression_gets_distinct_io() {
        let e = parse("z1").unwrap();
        let compiled = compile(&e, 1, 1.0).unwrap();
        assert!(compiled.qf.inputs.iter().all(|v| !compiled.qf.outputs.contains(v)));
        assert_sound("z1", 1, 1.0, 50, 1e-9);
    }

    #[test]
    fn shared_subexpressions_lower_once() {
        let e = parse("z1^2 + z1^2").unwrap();
        let compiled = compile(&e, 1, 1.0).unwrap();
        let squarings = compiled.log.iter().filter(|entry| entry.gadget == "squaring").count();
        assert_eq!(squarings, 1);
        assert_sound("z1^2 + z1^2", 1, 1.0, 100, 1e-9);
    }

    #[test]
    fn margin_invariant_holds_statically() {
        for src in ["z1^2", "z1*z2 - conj(z3)", "0.5*z1 + (0.25+0.25i)", "z1^4 - 2*z1^2 + 1"] {
            let e = parse(src).unwrap();
            let compiled = compile(&e, 3, 1.0).unwrap();
            for entry in &compiled.log {
                assert!(entry.margin >= 2.0, "{src}: margin {} in {}", entry.margin, entry.gadget);
            }
        }
    }

    #[test]
    fn scale_modes_cover_all_real_scalars() {
        assert_sound("3*z1", 1, 1.0, 80, 1e-9);
        assert_sound("0.25*z1", 1, 1.0, 80, 1e-9);
        assert_sound("-2.5*z1", 1, 1.0, 80, 1e-9);
        assert_sound("-z1", 1, 1.0, 80, 1e-9);
        assert_sound("1*z1", 1, 1.0, 80, 1e-9);
        assert_sound("0*z1 + z1", 1, 1.0, 80, 1e-9);
    }

    #[test]
    fn rejects_out_of_range_variables_and_bad_radius() {
        let e = parse("z3").unwrap();
        assert!(matches!(compile(&e, 2, 1.0), Err(CompileError::VarOutOfRange { .. })));
        let e = parse("z1").unwrap();
        assert!(matches!(compile(&e, 1, 0.0), Err(CompileError::BadRadius(_))));
    }

    #[test]
    fn splice_of_square_after_average_composes() {
        use crate::gadgets::{pantograph, squaring, PantographMode};
        let avg = pantograph(PantographMode::Average, 1.0, 1.0).unwrap();
        let sq = squaring(1.0).unwrap();
        let spliced = avg
            .linkage
            .splice(&sq.linkage, "sq", &[(avg.outputs[0].clone(), sq.inputs[0].clone())])
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let z = sample_disk(&mut rng, 0.9);
            let w = sample_disk(&mut rng, 0.9);
            let mid = (z + w) / 2.0;
            // Compose the two placements; identified vertices agree, so the
            // union of positions realizes the spliced linkage.
            let ra = avg.forward_place(&[z, w], Side::Plus).unwrap();
            let rs = sq.forward_place(&[mid], Side::Plus).unwrap();
            let mut pos = std::collections::BTreeMap::new();
            for (v, &p) in ra.positions() {
                pos.insert(v.clone(), p);
            }
            for (v, &p) in rs.positions() {
                let mapped = if *v == sq.inputs[0] {
                    avg.outputs[0].clone()
                } else {
                    v.namespaced("sq")
                };
                pos.insert(mapped, p);
            }
            assert!(spliced.max_residual(&pos) < crate::TOL_EXACT);
            let out = pos[&sq.outputs[0].namespaced("sq")];
            assert!((out - mid * mid).norm() < 1e-9);
        }
    }

    #[test]
    fn compile_of_composition_matches_staged_placement() {
        // (2*z)^2 compiled as one expression vs staged through two gadgets.
        let whole = parse("(2*z1)^2").unwrap();
        let compiled = compile(&whole, 1, 0.5).unwrap();
        let inner = compile(&parse("2*z1").unwrap(), 1, 0.5).unwrap();
        let outer = compile(&parse("z1^2").unwrap(), 1, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..60 {
            let z = sample_disk(&mut rng, 0.5);
            let direct = compiled.qf.apply(&[z], Side::Plus).unwrap()[0];
            let staged_mid = inner.qf.apply(&[z], Side::Plus).unwrap()[0];
            let staged = outer.qf.apply(&[staged_mid], Side::Plus).unwrap()[0];
            assert!((direct - staged).norm() < 1e-8);
        }
    }

    #[test]
    fn semialgebraic_nonnegative_half_line() {
        // {x >= 0} on R: P = (y^2 - x)^2; zero set projects to [0, inf).
        let x = parse("z1").unwrap();
        let (p, spec) = basic_semialgebraic_to_algebraic(&[], &[x], &[], 1);
        assert_eq!(spec, ProjectionSpec { n_original: 1, n_slack: 1 });
        // On the set: x = y^2 for real y.
        for y in [-2.0, -0.5, 0.0, 1.0, 3.0f64] {
            let v = p.eval(&[c(y * y, 0.0), c(y, 0.0)]);
            assert!(v.norm() < 1e-12);
        }
        // Off the set: x < 0 admits no real slack value.
        for x in [-0.1, -1.0, -5.0] {
            let mut best = f64::INFINITY;
            for k in 0..400 {
                let y = -10.0 + k as f64 * 0.05;
                best = best.min(p.eval(&[c(x, 0.0), c(y, 0.0)]).norm());
            }
            assert!(best > 1e-3, "x={x} should be excluded, best residual {best}");
        }
    }

    #[test]
    fn semialgebraic_positive_half_line() {
        // {x > 0}: P = (z^2 x - 1)^2; zero set projects to (0, inf).
        let x = parse("z1").unwrap();
        let (p, spec) = basic_semialgebraic_to_algebraic(&[], &[], &[x], 1);
        assert_eq!(spec.n_slack, 1);
        for x in [0.1, 1.0, 7.0f64] {
            let z = (1.0 / x).sqrt();
            assert!(p.eval(&[c(x, 0.0), c(z, 0.0)]).norm() < 1e-12);
        }
        for x in [0.0, -0.5, -3.0] {
            let mut best = f64::INFINITY;
            for k in 0..400 {
                let z = -10.0 + k as f64 * 0.05;
                best = best.min(p.eval(&[c(x, 0.0), c(z, 0.0)]).norm());
            }
            assert!(best >= 0.99, "x={x} must be excluded");
        }
    }

    #[test]
    fn semialgebraic_empty_lists_give_zero() {
        let (p, spec) = basic_semialgebraic_to_algebraic(&[], &[], &[], 2);
        assert_eq!(spec, ProjectionSpec { n_original: 2, n_slack: 0 });
        assert!(p.eval(&[c(3.0, 1.0), c(-2.0, 0.5)]).norm() < 1e-15);
    }

    #[test]
    fn zero_set_of_identity_is_origin() {
        let e = parse("z1").unwrap();
        let zs = linkage_for_zero_set(&e, 1, 1.0).unwrap();
        let samples = crate::solver::sample_configurations(&zs.linkage, 60, 9);
        assert!(!samples.is_empty());
        for r in &samples {
            let z = r.position(&zs.markers.0[0]);
            assert!(z.norm() < 1e-4, "marker should cluster at origin, got {z}");
        }
    }

    #[test]
    fn zero_set_of_difference_is_diagonal() {
        let e = parse("z1 - z2").unwrap();
        let zs = linkage_for_zero_set(&e, 2, 1.0).unwrap();
        let samples = crate::solver::sample_configurations(&zs.linkage, 80, 15);
        assert!(samples.len() > 5, "found {}", samples.len());
        for r in &samples {
            let z1 = r.position(&zs.markers.0[0]);
            let z2 = r.position(&zs.markers.0[1]);
            // Interior-joint play through the three-pantograph chain limits
            // what a solver realization resolves at double precision.
            assert!((z1 - z2).norm() < 1e-4, "off diagonal: {z1} vs {z2}");
        }
    }
}
