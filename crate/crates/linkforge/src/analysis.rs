//! Executable property checks: quasifunctionality verification,
//! semiconfiguration sampling, isometry-invariance and compactness reports.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::Expr;
use crate::gadgets::{QfLinkage, BRANCHES};
use crate::geom::{sample_disk, unit, Side};
use crate::linkage::{EuclideanMotion, Linkage, MarkerSet, Realization, VertexId};
use crate::solver::{
    sample_configurations_with_init, solve, InitPolicy, SolveOptions, SolveProblem,
};

/// Sampled evidence for a semiconfiguration space: marker tuples of
/// solver-validated realizations.
#[derive(Debug, Clone, Serialize)]
pub struct PointCloud {
    pub markers: Vec<VertexId>,
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<Vec<Complex64>>,
    pub seed: u64,
    pub restarts: usize,
    pub converged: usize,
}

fn serialize_points<S: serde::Serializer>(
    points: &[Vec<Complex64>],
    s: S,
) -> Result<S::Ok, S::Error> {
    let as_pairs: Vec<Vec<[f64; 2]>> =
        points.iter().map(|p| p.iter().map(|z| [z.re, z.im]).collect()).collect();
    as_pairs.serialize(s)
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sample realizations and restrict them to the marker set.
pub fn sample_semiconfiguration(l: &Linkage, w: &MarkerSet, n: usize, seed: u64) -> PointCloud {
    sample_semiconfiguration_opts(l, w, n, seed, &SolveOptions::default(), None)
}

/// As [`sample_semiconfiguration`], with solver options and an optional
/// placement hint: the same linkage as an unpinned quasifunctional gadget.
/// With a hint, each restart draws random inputs, projects them by Newton
/// iteration through the gadget's forward placement onto the set where the
/// pinned outputs reach their pins, and warm-starts the solver there. The
/// returned points are still the generic solver's own converged output;
/// without the projection the solver rarely finds the feasible set of a
/// deeply composed linkage from a random start.
pub fn sample_semiconfiguration_opts(
    l: &Linkage,
    w: &MarkerSet,
    n: usize,
    seed: u64,
    opts: &SolveOptions,
    hint: Option<&QfLinkage>,
) -> PointCloud {
    let realizations = sample_realizations_opts(l, n, seed, opts, hint);
    PointCloud {
        markers: w.0.clone(),
        points: realizations.iter().map(|r| r.restrict(w)).collect(),
        seed,
        restarts: n,
        converged: realizations.len(),
    }
}

/// Full realizations behind [`sample_semiconfiguration_opts`], for checks
/// that need every vertex position.
pub fn sample_realizations_opts(
    l: &Linkage,
    n: usize,
    seed: u64,
    opts: &SolveOptions,
    hint: Option<&QfLinkage>,
) -> Vec<Realization> {
    match hint {
        None => crate::solver::sample_configurations_opts(l, n, seed, opts),
        Some(qf) => {
            let targets: Vec<(usize, Complex64)> = qf
                .outputs
                .iter()
                .enumerate()
                .filter_map(|(i, v)| l.pin_of(v).map(|z| (i, z)))
                .collect();
            sample_configurations_with_init(l, n, seed, opts, |restart_seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed ^ 0x517c_c1b7_2722_0a95);
                let side = if rng.gen::<bool>() { Side::Plus } else { Side::Minus };
                let inputs = qf.domain.sample(&mut rng);
                let projected = project_to_targets(qf, &inputs, &targets, side)?;
                qf.forward_place(&projected, side).ok()
            })
        }
    }
}

/// Newton projection of gadget inputs onto the set where the selected
/// outputs equal their targets, using finite differences of the forward
/// placement map. Least-norm steps handle the underdetermined case.
fn project_to_targets(
    qf: &QfLinkage,
    start: &[Complex64],
    targets: &[(usize, Complex64)],
    side: Side,
) -> Option<Vec<Complex64>> {
    if targets.is_empty() {
        return Some(start.to_vec());
    }
    let n = start.len();
    let m = targets.len();
    let scale = qf.domain.sample_hi.iter().cloned().fold(1.0f64, f64::max);
    let residual = |inputs: &[Complex64]| -> Option<Vec<f64>> {
        let outs = qf.apply(inputs, side).ok()?;
        let mut h = Vec::with_capacity(2 * m);
        for &(i, want) in targets {
            let d = outs[i] - want;
            h.push(d.re);
            h.push(d.im);
        }
        Some(h)
    };
    let mut x: Vec<Complex64> = start.to_vec();
    let mut h = residual(&x)?;
    for _ in 0..60 {
        let hn: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if hn < 1e-12 * scale.max(1.0) {
            return Some(x);
        }
        // Finite-difference Jacobian of h with respect to the 2n input
        // coordinates.
        let eps = 1e-7 * scale.max(1.0);
        let mut jac = vec![0.0f64; 2 * m * 2 * n];
        for col in 0..2 * n {
            let mut xp = x.clone();
            if col % 2 == 0 {
                xp[col / 2] += Complex64::new(eps, 0.0);
            } else {
                xp[col / 2] += Complex64::new(0.0, eps);
            }
            let hp = residual(&xp)?;
            for row in 0..2 * m {
                jac[row * 2 * n + col] = (hp[row] - h[row]) / eps;
            }
        }
        // Least-norm step: solve (J J^T) y = h, step = -J^T y.
        let dim = 2 * m;
        let mut jjt = vec![0.0f64; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let mut s = 0.0;
                for c in 0..2 * n {
                    s += jac[a * 2 * n + c] * jac[b * 2 * n + c];
                }
                jjt[a * dim + b] = s;
            }
        }
        for d in 0..dim {
            jjt[d * dim + d] += 1e-12;
        }
        let y = solve_dense(&mut jjt, &h, dim)?;
        let mut step = vec![0.0f64; 2 * n];
        for c in 0..2 * n {
            let mut s = 0.0;
            for a in 0..dim {
                s += jac[a * 2 * n + c] * y[a];
            }
            step[c] = -s;
        }
        // Backtrack if the full step leaves the domain or fails to improve.
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let mut xt = x.clone();
            for k in 0..n {
                xt[k] += alpha * Complex64::new(step[2 * k], step[2 * k + 1]);
            }
            if let Some(ht) = residual(&xt) {
                let htn: f64 = ht.iter().map(|v| v * v).sum::<f64>().sqrt();
                if htn < hn {
                    x = xt;
                    h = ht;
                    improved = true;
                    break;
                }
            }
            alpha /= 2.0;
        }
        if !improved {
            return None;
        }
    }
    None
}

/// Gaussian elimination with partial pivoting for the tiny dense systems in
/// the projection step.
fn solve_dense(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut aug: Vec<f64> = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            aug[i * (n + 1) + j] = a[i * n + j];
        }
        aug[i * (n + 1) + n] = b[i];
    }
    for col in 0..n {
        let mut best = col;
        for row in (col + 1)..n {
            if aug[row * (n + 1) + col].abs() > aug[best * (n + 1) + col].abs() {
                best = row;
            }
        }
        if aug[best * (n + 1) + col].abs() < 1e-300 {
            return None;
        }
        if best != col {
            for j in 0..=n {
                aug.swap(col * (n + 1) + j, best * (n + 1) + j);
            }
        }
        let pivot = aug[col * (n + 1) + col];
        for row in (col + 1)..n {
            let f = aug[row * (n + 1) + col] / pivot;
            for j in col..=n {
                aug[row * (n + 1) + j] -= f * aug[col * (n + 1) + j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = aug[i * (n + 1) + n];
        for j in (i + 1)..n {
            s -= aug[i * (n + 1) + j] * x[j];
        }
        x[i] = s / aug[i * (n + 1) + i];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Quasifunctionality verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    /// Bound on |placed output - expected| per sample.
    pub tol_output: f64,
    /// Bound on forward-placement edge residuals.
    pub tol_residual: f64,
    /// Fraction of samples cross-checked with the generic solver.
    pub solver_fraction: f64,
    /// Bound on |solver output - placed output| for the cross-checks. The
    /// interior joints limit what double precision can resolve here, so the
    /// bound is wider than the placement tolerances.
    pub tol_solver: f64,
    /// How far the warm start is perturbed before the solver cross-check.
    pub perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol_output: 1e-9,
            tol_residual: 1e-9,
            solver_fraction: 0.05,
            tol_solver: 1e-3,
            perturbation: 1e-6,
        }
    }
}

/// Result of sampling a gadget's domain against an expected function.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub samples: usize,
    pub branches: usize,
    pub max_functional_error: f64,
    pub max_edge_residual: f64,
    pub placement_failures: usize,
    pub solver_checks: usize,
    pub solver_failures: usize,
    pub max_solver_deviation: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Sample the gadget's declared domain, forward-place every branch, compare
/// outputs against `f`, and cross-check a fraction of samples with the
/// generic solver (inputs fixed, warm-started from a perturbed placement).
pub fn verify_quasifunctional(
    g: &QfLinkage,
    f: &Expr,
    n: usize,
    seed: u64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport {
        samples: 0,
        branches: BRANCHES.len(),
        max_functional_error: 0.0,
        max_edge_residual: 0.0,
        placement_failures: 0,
        solver_checks: 0,
        solver_failures: 0,
        max_solver_deviation: 0.0,
        pass: true,
        failures: Vec::new(),
    };
    let solver_opts = SolveOptions::default();
    let stride = if opts.solver_fraction > 0.0 {
        (1.0 / opts.solver_fraction).round().max(1.0) as usize
    } else {
        usize::MAX
    };
    for k in 0..n {
        let inputs = g.domain.sample(&mut rng);
        report.samples += 1;
        let want = f.eval(&inputs);
        let mut placed: Option<Realization> = None;
        for side in BRANCHES {
            match g.forward_place(&inputs, side) {
                Ok(r) => {
                    let residual = worst_edge_residual(&g.linkage, &r);
                    report.max_edge_residual = report.max_edge_residual.max(residual);
                    let out = r.position(&g.outputs[0]);
                    let err = (out - want).norm();
                    report.max_functional_error = report.max_functional_error.max(err);
                    if err > opts.tol_output && report.failures.len() < 8 {
                        report.failures.push(format!(
                            "output off by {err:.3e} at {inputs:?} (branch {side:?})"
                        ));
                    }
                    placed = Some(r);
                }
                Err(e) => {
                    report.placement_failures += 1;
                    if report.failures.len() < 8 {
                        report.failures.push(format!("placement failed at {inputs:?}: {e}"));
                    }
                }
            }
        }
        if k % stride == 0 {
            if let Some(base) = placed {
                report.solver_checks += 1;
                let mut problem = SolveProblem::new(
                    &g.linkage,
                    InitPolicy::WarmStartPerturbed {
                        base: base.clone(),
                        sigma: opts.perturbation,
                        seed: seed.wrapping_add(k as u64),
                    },
                );
                for (v, &z) in g.inputs.iter().zip(&inputs) {
                    problem = problem.fix(v.clone(), z);
                }
                let res = solve(&problem, &solver_opts);
                match res.realization {
                    Some(r) => {
                        let dev = (r.position(&g.outputs[0]) - base.position(&g.outputs[0])).norm();
                        report.max_solver_deviation = report.max_solver_deviation.max(dev);
                        if dev > opts.tol_solver && report.failures.len() < 8 {
                            report.failures.push(format!("solver deviates by {dev:.3e} at {inputs:?}"));
                        }
                    }
                    None => {
                        report.solver_failures += 1;
                        if report.failures.len() < 8 {
                            report
                                .failures
                                .push(format!("solver found no realization at {inputs:?}"));
                        }
                    }
                }
            }
        }
    }
    report.pass = report.placement_failures == 0
        && report.solver_failures == 0
        && report.max_functional_error <= opts.tol_output
        && report.max_edge_residual <= opts.tol_residual
        && report.max_solver_deviation <= opts.tol_solver;
    report
}

fn worst_edge_residual(l: &Linkage, r: &Realization) -> f64 {
    let mut worst: f64 = 0.0;
    for e in l.edges() {
        worst = worst.max(((r.position(&e.u) - r.position(&e.v)).norm() - e.len).abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// Isometry invariance and compactness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub pinned_vertices: usize,
    pub group: String,
    pub samples: usize,
    pub motions_tested: usize,
    pub max_residual_after_motion: f64,
    pub pass: bool,
}

/// Check the symmetry the pin count leaves available:
/// no pins -> arbitrary plane isometries map realizations to realizations;
/// one pin -> rotations/reflections about its image; two pins -> the
/// reflection across the line through them. Residuals and pin conditions
/// are re-checked on the transformed realization.
pub fn check_invariance(l: &Linkage, n: usize, seed: u64) -> InvarianceReport {
    let pins: Vec<Complex64> = l.pins().values().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let realizations = crate::solver::sample_configurations(l, n, seed);
    let (group, motions): (String, Vec<EuclideanMotion>) = match pins.len() {
        0 => {
            let motions = (0..16)
                .map(|_| EuclideanMotion {
                    rot: unit(rng.gen::<f64>() * std::f64::consts::TAU),
                    reflect: rng.gen(),
                    trans: sample_disk(&mut rng, 10.0),
                })
                .collect();
            ("Euc(2)".to_owned(), motions)
        }
        1 => {
            let center = pins[0];
            let motions = (0..16)
                .map(|_| {
                    let rot = unit(rng.gen::<f64>() * std::f64::consts::TAU);
                    let reflect = rng.gen::<bool>();
                    // Fix the pin image: z -> rot*(z - c) + c, possibly with
                    // a conjugation first.
                    let trans =
                        if reflect { center - rot * center.conj() } else { center - rot * center };
                    EuclideanMotion { rot, reflect, trans }
                })
                .collect();
            ("O(2) about the pin image".to_owned(), motions)
        }
        2 => {
            if (pins[0] - pins[1]).norm() <= crate::TOL_EXACT {
                ("degenerate: coincident pins".to_owned(), Vec::new())
            } else {
                (
                    "reflection across the pin line".to_owned(),
                    vec![EuclideanMotion::reflection_across(pins[0], pins[1])],
                )
            }
        }
        _ => ("trivial (three or more pins)".to_owned(), Vec::new()),
    };

    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for r in &realizations {
        for g in &motions {
            let moved = r.transformed(g);
            worst = worst.max(l.max_residual(moved.positions()));
            tested += 1;
        }
    }
    InvarianceReport {
        pinned_vertices: pins.len(),
        group,
        samples: realizations.len(),
        motions_tested: tested,
        max_residual_after_motion: worst,
        pass: tested == 0 || worst < crate::TOL_SOLVE * 10.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessReport {
    /// Sum of all edge lengths: every vertex of a connected pinned linkage
    /// stays within this distance of the pin image.
    pub bound: f64,
    pub anchor: Option<(f64, f64)>,
    pub max_observed_radius: f64,
    pub points_checked: usize,
    pub applicable: bool,
    pub pass: bool,
}

/// Ball bound for connected linkages with at least one pin: no vertex can
/// be farther from a pin image than the total edge length.
pub fn check_compactness(l: &Linkage, realizations: &[Realization]) -> CompactnessReport {
    let anchor = l.pins().values().next().copied();
    let applicable = anchor.is_some() && l.is_connected();
    let bound = l.total_edge_length();
    let mut max_radius: f64 = 0.0;
    let mut checked = 0;
    if let Some(z0) = anchor {
        for r in realizations {
            for (_, &z) in r.positions() {
                max_radius = max_radius.max((z - z0).norm());
                checked += 1;
            }
        }
    }
    CompactnessReport {
        bound,
        anchor: anchor.map(|z| (z.re, z.im)),
        max_observed_radius: max_radius,
        points_checked: checked,
        applicable,
        pass: applicable && max_radius <= bound + crate::TOL_SOLVE,
    }
}

// ---------------------------------------------------------------------------
// Slicing and cloud geometry
// ---------------------------------------------------------------------------

/// Translate each point tuple so its last coordinate is 0: the map
/// (z_1, ..., z_k) -> (z_1 - z_k, ..., z_{k-1} - z_k, 0).
pub fn slice_last_zero(cloud: &PointCloud) -> PointCloud {
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let last = *p.last().expect("slice of empty tuple");
            let mut q: Vec<Complex64> = p.iter().map(|z| z - last).collect();
            if let Some(tail) = q.last_mut() {
                *tail = Complex64::new(0.0, 0.0);
            }
            q
        })
        .collect();
    PointCloud { points, ..cloud.clone() }
}

fn tuple_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// One-sided Hausdorff distance: sup over `from` of the distance to the
/// nearest point of `to`.
pub fn hausdorff_one_sided(from: &[Vec<Complex64>], to: &[Vec<Complex64>]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| tuple_distance(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::gadgets::{identity_gadget, squaring};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn verify_identity_gadget_passes() {
        let g = identity_gadget();
        let f = parse("z1").unwrap();
        let r = verify_quasifunctional(&g, &f, 120, 4, &VerifyOptions::default());
        assert!(r.pass, "failures: {:?}", r.failures);
        assert!(r.max_functional_error < 1e-9);
    }

    #[test]
    fn verify_squaring_against_wrong_function_fails() {
        let g = squaring(1.0).unwrap();
        let f = parse("z1").unwrap(); // wrong on purpose
        let r = verify_quasifunctional(&g, &f, 60, 4, &VerifyOptions::default());
        assert!(!r.pass);
        assert!(r.max_functional_error > 0.1);
    }

    #[test]
    fn identity_cloud_lies_on_diagonal() {
        let g = identity_gadget();
        let w = MarkerSet::new([VertexId::new("D"), VertexId::new("E")]);
        let cloud = sample_semiconfiguration(&g.linkage, &w, 50, 7);
        assert!(!cloud.is_empty());
        for p in &cloud.points {
            assert!((p[0] - p[1]).norm() < crate::TOL_SOLVE);
        }
    }

    #[test]
    fn invariance_unpinned_full_group() {
        let g = identity_gadget();
        let rep = check_invariance(&g.linkage, 20, 5);
        assert_eq!(rep.pinned_vertices, 0);
        assert!(rep.pass, "max residual {}", rep.max_residual_after_motion);
    }

    #[test]
    fn invariance_one_pin_rotations() {
        let g = identity_gadget();
        let pinned = g.linkage.pin(&"D".into(), c(0.0, 0.0)).unwrap();
        let rep = check_invariance(&pinned, 20, 6);
        assert_eq!(rep.pinned_vertices, 1);
        assert!(rep.group.contains("O(2)"));
        assert!(rep.pass, "max residual {}", rep.max_residual_after_motion);
    }

    #[test]
    fn translation_breaks_one_pin_invariance() {
        let g = identity_gadget();
        let pinned = g.linkage.pin(&"D".into(), c(0.0, 0.0)).unwrap();
        let samples = crate::solver::sample_configurations(&pinned, 10, 3);
        assert!(!samples.is_empty());
        let shift = EuclideanMotion::translation(c(1.0, 0.0));
        for r in &samples {
            let moved = r.transformed(&shift);
            assert!(pinned.max_residual(moved.positions()) > 0.5);
        }
    }

    #[test]
    fn invariance_two_pins_reflection() {
        let g = identity_gadget();
        // D at 0 and A at spoke distance on the real axis: consistent pins.
        let pinned = g
            .linkage
            .pin(&"D".into(), c(0.0, 0.0))
            .unwrap()
            .pin(&"A".into(), c(crate::gadgets::IDENTITY_SPOKE, 0.0))
            .unwrap();
        let rep = check_invariance(&pinned, 20, 8);
        assert_eq!(rep.pinned_vertices, 2);
        assert!(rep.group.contains("reflection"));
        assert!(rep.pass, "max residual {}", rep.max_residual_after_motion);
    }

    #[test]
    fn compactness_bound_holds_for_pinned_identity() {
        let g = identity_gadget();
        let pinned = g.linkage.pin(&"D".into(), c(0.0, 0.0)).unwrap();
        let samples = crate::solver::sample_configurations(&pinned, 30, 9);
        let rep = check_compactness(&pinned, &samples);
        assert!(rep.applicable);
        assert!(rep.pass, "radius {} vs bound {}", rep.max_observed_radius, rep.bound);
    }

    #[test]
    fn compactness_single_pinned_vertex_radius_zero() {
        let mut l = Linkage::new();
        l.add_vertex("P");
        let l = l.pin(&"P".into(), c(2.0, 1.0)).unwrap();
        let samples = crate::solver::sample_configurations(&l, 5, 1);
        let rep = check_compactness(&l, &samples);
        assert!(rep.applicable);
        assert!(rep.pass);
        assert!(rep.max_observed_radius < 1e-12);
    }

    #[test]
    fn compactness_requires_pin() {
        let g = identity_gadget();
        let rep = check_compactness(&g.linkage, &[]);
        assert!(!rep.applicable);
        assert!(!rep.pass);
    }

    #[test]
    fn slice_diagonal_collapses_to_origin() {
        let cloud = PointCloud {
            markers: vec![VertexId::new("D"), VertexId::new("E")],
            points: vec![vec![c(1.0, 2.0), c(1.0, 2.0)], vec![c(-3.0, 0.5), c(-3.0, 0.5)]],
            seed: 0,
            restarts: 2,
            converged: 2,
        };
        let sliced = slice_last_zero(&cloud);
        for p in &sliced.points {
            assert!(p[0].norm() < 1e-15);
            assert!(p[1].norm() < 1e-15);
        }
    }

    #[test]
    fn slice_is_idempotent() {
        let cloud = PointCloud {
            markers: vec![VertexId::new("A"), VertexId::new("B")],
            points: vec![vec![c(1.0, 2.0), c(0.5, -1.0)], vec![c(0.0, 0.0), c(2.0, 2.0)]],
            seed: 0,
            restarts: 2,
            converged: 2,
        };
        let once = slice_last_zero(&cloud);
        let twice = slice_last_zero(&once);
        assert_eq!(once.points, twice.points);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]];
        let b = vec![vec![c(0.0, 0.1)], vec![c(1.0, 0.0)]];
        assert!((hausdorff_one_sided(&a, &b) - 0.1).abs() < 1e-12);
        assert!(hausdorff_one_sided(&b, &a) < 0.1 + 1e-12);
    }
}
