//! Generic numerical realization finding and curve tracing.
//!
//! Works on any [`Linkage`], independent of gadget structure, which makes it
//! the oracle the exact forward placements are cross-checked against. Each
//! edge contributes one residual |p(u) - p(v)|^2 - len^2 (squared distances
//! keep everything polynomial and smooth); pinned and caller-fixed vertices
//! are substituted, never part of the unknown vector.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::unit;
use crate::linkage::{Linkage, MarkerSet, Realization, VertexId};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    /// Convergence threshold on the 2-norm of the scale-weighted residual
    /// vector, whose entries are (|p(u)-p(v)|^2 - len^2) / len^2. The
    /// relative units keep one threshold meaningful across linkages whose
    /// bars span several orders of magnitude.
    pub tol_residual_norm: f64,
    /// How many fold-flip repair rounds to attempt after the iteration
    /// stalls in a fold (see the basin-hop logic in the solver core).
    pub max_repairs: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 1000,
            lambda_init: 1e-3,
            lambda_factor: 10.0,
            tol_residual_norm: 1e-12,
            max_repairs: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub realization: Option<Realization>,
    /// 2-norm of the scale-weighted residual vector at exit.
    pub residual_norm: f64,
    /// Worst |distance - length| over edges, in plain length units.
    pub max_edge_residual: f64,
    /// Whether the residual norm reached the deep threshold. Interior
    /// joints give a converged-but-not-deep realization a transverse play
    /// on the order of sqrt(residual), so quality-sensitive consumers
    /// (cloud sampling, trace) only take deep results.
    pub deep: bool,
    pub iterations: usize,
    /// The final iterate regardless of status; a valid realization only
    /// when converged. Kept for diagnostics and rendering of near misses.
    pub final_state: Realization,
}

/// Starting-point policy for one solve.
#[derive(Debug, Clone)]
pub enum InitPolicy {
    /// Randomized placement: vertices are placed breadth-first from the
    /// fixed set, each at bar distance from an already-placed neighbor in a
    /// uniformly random direction. Keeps every start inside the reachable
    /// ball and leaves only loop-closure residuals to iterate on.
    Seeded(u64),
    WarmStart(Realization),
    WarmStartPerturbed { base: Realization, sigma: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SolveProblem<'a> {
    pub linkage: &'a Linkage,
    /// Caller-fixed vertices on top of the linkage's own pins.
    pub fixed: BTreeMap<VertexId, Complex64>,
    pub init: InitPolicy,
}

impl<'a> SolveProblem<'a> {
    pub fn new(linkage: &'a Linkage, init: InitPolicy) -> Self {
        SolveProblem { linkage, fixed: BTreeMap::new(), init }
    }

    pub fn fix(mut self, v: VertexId, z: Complex64) -> Self {
        self.fixed.insert(v, z);
        self
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no realization found at the start of the path")]
    StartInfeasible,
}

/// Parameterized drive curve for [`trace`].
#[derive(Debug, Clone)]
pub enum TracePath {
    Circle { center: Complex64, radius: f64 },
    Arc { center: Complex64, radius: f64, theta0: f64, theta1: f64 },
    Segment { from: Complex64, to: Complex64 },
}

impl TracePath {
    pub fn at(&self, t: f64) -> Complex64 {
        match *self {
            TracePath::Circle { center, radius } => center + radius * unit(std::f64::consts::TAU * t),
            TracePath::Arc { center, radius, theta0, theta1 } => {
                center + radius * unit(theta0 + t * (theta1 - theta0))
            }
            TracePath::Segment { from, to } => from + t * (to - from),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub markers: Vec<VertexId>,
    /// One row of marker positions per completed continuation step.
    pub rows: Vec<Vec<Complex64>>,
    /// Steps completed; shorter than requested when the path left the
    /// feasible set.
    pub completed: usize,
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt core
// ---------------------------------------------------------------------------

const NOT_FREE: usize = usize::MAX;

/// Indexed view of one solve: free vertices in RCM order (two scalar slots
/// each) plus the profile of the normal matrix.
struct System {
    free: Vec<VertexId>,
    /// Edge endpoints as free-vertex indices (NOT_FREE when substituted),
    /// fixed endpoint positions, the squared target length, and the
    /// 1/len^2 weight that puts every residual in scale-free units.
    edges: Vec<(usize, usize, Complex64, Complex64, f64, f64)>,
    /// Edge indices incident to each free vertex.
    incident: Vec<Vec<usize>>,
    /// Profile Cholesky layout over 2*free.len() scalar rows.
    row_start: Vec<usize>,
    row_offset: Vec<usize>,
    tol: f64,
}

impl System {
    fn build(l: &Linkage, fixed: &BTreeMap<VertexId, Complex64>, opts: &SolveOptions) -> System {
        let mut fixed_pos: BTreeMap<&VertexId, Complex64> =
            l.pins().iter().map(|(v, &z)| (v, z)).collect();
        for (v, &z) in fixed {
            fixed_pos.insert(v, z);
        }
        let free_unordered: Vec<VertexId> =
            l.vertices().filter(|v| !fixed_pos.contains_key(*v)).cloned().collect();
        let free = rcm_order(l, &free_unordered);
        let index: BTreeMap<&VertexId, usize> = free.iter().enumerate().map(|(i, v)| (v, i)).collect();

        let mut edges = Vec::with_capacity(l.edges().len());
        let zero = Complex64::new(0.0, 0.0);
        for e in l.edges() {
            let iu = index.get(&e.u).copied().unwrap_or(NOT_FREE);
            let iv = index.get(&e.v).copied().unwrap_or(NOT_FREE);
            let pu = if iu == NOT_FREE { fixed_pos[&e.u] } else { zero };
            let pv = if iv == NOT_FREE { fixed_pos[&e.v] } else { zero };
            let l2 = e.len * e.len;
            edges.push((iu, iv, pu, pv, l2, 1.0 / l2.max(1e-18)));
        }

        // Scalar-level profile: row 2k(+1) reaches left to the lowest slot of
        // the earliest free neighbor of vertex k.
        let n = free.len();
        let mut first_nb: Vec<usize> = (0..n).collect();
        for &(iu, iv, _, _, _, _) in &edges {
            if iu != NOT_FREE && iv != NOT_FREE {
                let (a, b) = (iu.min(iv), iu.max(iv));
                first_nb[b] = first_nb[b].min(a);
            }
        }
        let mut row_start = vec![0usize; 2 * n];
        for k in 0..n {
            row_start[2 * k] = 2 * first_nb[k];
            row_start[2 * k + 1] = 2 * first_nb[k];
        }
        let mut row_offset = vec![0usize; 2 * n + 1];
        for i in 0..2 * n {
            row_offset[i + 1] = row_offset[i] + (i - row_start[i] + 1);
        }
        let mut incident = vec![Vec::new(); n];
        for (k, &(iu, iv, _, _, _, _)) in edges.iter().enumerate() {
            if iu != NOT_FREE {
                incident[iu].push(k);
            }
            if iv != NOT_FREE {
                incident[iv].push(k);
            }
        }
        // Weighted residuals are scale-free, so the tolerance needs no
        // adjustment for the linkage's absolute size.
        let tol = opts.tol_residual_norm;
        System { free, edges, incident, row_start, row_offset, tol }
    }

    fn n_scalars(&self) -> usize {
        2 * self.free.len()
    }

    fn residual_into(&self, x: &[f64], r: &mut [f64]) {
        for (k, &(iu, iv, pu, pv, l2, w)) in self.edges.iter().enumerate() {
            let a = if iu == NOT_FREE { pu } else { Complex64::new(x[2 * iu], x[2 * iu + 1]) };
            let b = if iv == NOT_FREE { pv } else { Complex64::new(x[2 * iv], x[2 * iv + 1]) };
            let d = a - b;
            r[k] = (d.norm_sqr() - l2) * w;
        }
    }

    /// Accumulate J^T J (profile storage) and J^T r. With `second_order` the
    /// exact residual Hessians r_k * H_k join in (H_k is the constant
    /// curvature of a squared-distance residual), turning the step into a
    /// damped Newton step. That is what converges through the
    /// quadratically-degenerate directions the interior joints create, where
    /// plain Gauss-Newton crawls.
    fn normal_equations(&self, x: &[f64], r: &[f64], a: &mut [f64], g: &mut [f64], second_order: bool) {
        a.fill(0.0);
        g.fill(0.0);
        for (k, &(iu, iv, pu, pv, _, w)) in self.edges.iter().enumerate() {
            let zu = if iu == NOT_FREE { pu } else { Complex64::new(x[2 * iu], x[2 * iu + 1]) };
            let zv = if iv == NOT_FREE { pv } else { Complex64::new(x[2 * iv], x[2 * iv + 1]) };
            let d = zu - zv;
            let rk = r[k];
            let mut slots = [NOT_FREE; 4];
            let mut grads = [0.0f64; 4];
            let mut m = 0;
            if iu != NOT_FREE {
                slots[m] = 2 * iu;
                grads[m] = 2.0 * w * d.re;
                slots[m + 1] = 2 * iu + 1;
                grads[m + 1] = 2.0 * w * d.im;
                m += 2;
            }
            if iv != NOT_FREE {
                slots[m] = 2 * iv;
                grads[m] = -2.0 * w * d.re;
                slots[m + 1] = 2 * iv + 1;
                grads[m + 1] = -2.0 * w * d.im;
                m += 2;
            }
            for p in 0..m {
                g[slots[p]] += grads[p] * rk;
                for q in 0..m {
                    let (i, j) = (slots[p], slots[q]);
                    if j <= i {
                        debug_assert!(j >= self.row_start[i]);
                        a[self.row_offset[i] + (j - self.row_start[i])] += grads[p] * grads[q];
                    }
                }
            }
            if second_order {
                // d^2 r / dp^2 = 2w on each coordinate's diagonal, -2w
                // between matching coordinates of the two endpoints.
                for p in 0..m {
                    let i = slots[p];
                    a[self.row_offset[i] + (i - self.row_start[i])] += 2.0 * w * rk;
                }
                if m == 4 {
                    for (p, q) in [(0usize, 2usize), (1, 3)] {
                        let (hi, lo) = if slots[p] > slots[q] { (slots[p], slots[q]) } else { (slots[q], slots[p]) };
                        a[self.row_offset[hi] + (lo - self.row_start[hi])] += -2.0 * w * rk;
                    }
                }
            }
        }
    }

    /// In-place profile Cholesky; returns false on a non-positive pivot.
    fn cholesky(&self, a: &mut [f64]) -> bool {
        let n = self.n_scalars();
        for i in 0..n {
            let si = self.row_start[i];
            for j in si..=i {
                let sj = self.row_start[j];
                let lo = si.max(sj);
                let mut sum = a[self.row_offset[i] + (j - si)];
                for k in lo..j {
                    sum -= a[self.row_offset[i] + (k - si)] * a[self.row_offset[j] + (k - sj)];
                }
                if j == i {
                    if sum <= 0.0 {
                        return false;
                    }
                    a[self.row_offset[i] + (i - si)] = sum.sqrt();
                } else {
                    a[self.row_offset[i] + (j - si)] = sum / a[self.row_offset[j] + (j - sj)];
                }
            }
        }
        true
    }

    fn endpoint(&self, x: &[f64], idx: usize, fixed: Complex64) -> Complex64 {
        if idx == NOT_FREE {
            fixed
        } else {
            Complex64::new(x[2 * idx], x[2 * idx + 1])
        }
    }

    /// The two endpoint positions of edge `k` as (side of `v`, other side).
    fn edge_ends(&self, x: &[f64], k: usize, v: usize) -> (Complex64, Complex64) {
        let (iu, iv, pu, pv, _, _) = self.edges[k];
        let a = self.endpoint(x, iu, pu);
        let b = self.endpoint(x, iv, pv);
        if iu == v {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Free vertices within two hops of edge `k`'s endpoints.
    fn region_of_edge(&self, k: usize) -> Vec<usize> {
        let (iu, iv, _, _, _, _) = self.edges[k];
        let mut verts: Vec<usize> = [iu, iv].into_iter().filter(|&v| v != NOT_FREE).collect();
        for _hop in 0..2 {
            let frontier = verts.clone();
            for seed in frontier {
                for &e in &self.incident[seed] {
                    let (a, b, _, _, _, _) = self.edges[e];
                    for w in [a, b] {
                        if w != NOT_FREE && !verts.contains(&w) {
                            verts.push(w);
                        }
                    }
                }
            }
        }
        verts.truncate(20);
        verts
    }

    fn edges_touching(&self, verts: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &v in verts {
            for &e in &self.incident[v] {
                if !out.contains(&e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Sum of squared weighted residuals over the given edges.
    fn score(&self, x: &[f64], edges: &[usize]) -> f64 {
        let mut s = 0.0;
        for &k in edges {
            let (iu, iv, pu, pv, l2, w) = self.edges[k];
            let d = self.endpoint(x, iu, pu) - self.endpoint(x, iv, pv);
            let r = (d.norm_sqr() - l2) * w;
            s += r * r;
        }
        s
    }

    /// A few sweeps of circle-projection averaging over a small vertex set:
    /// each vertex moves to the mean of its projections onto the incident
    /// bar circles. Cheap local relaxation used to judge flip candidates.
    fn relax_region(&self, x: &mut [f64], verts: &[usize], sweeps: usize) {
        for _ in 0..sweeps {
            for &v in verts {
                let here = Complex64::new(x[2 * v], x[2 * v + 1]);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut count = 0.0;
                for &k in &self.incident[v] {
                    let (_, other) = self.edge_ends(x, k, v);
                    let (_, _, _, _, l2, _) = self.edges[k];
                    let len = l2.sqrt();
                    let d = here - other;
                    let n = d.norm();
                    let target = if n > 1e-12 * len.max(1.0) {
                        other + d * (len / n)
                    } else {
                        other + Complex64::new(len, 0.0)
                    };
                    acc += target;
                    count += 1.0;
                }
                if count > 0.0 {
                    x[2 * v] = acc.re / count;
                    x[2 * v + 1] = acc.im / count;
                }
            }
        }
    }

    /// Basin hop: fold configurations are local minima that differ from a
    /// valid branch by reflecting one vertex across the line through two of
    /// its bar anchors (the other intersection of the two circles). For each
    /// badly violated edge, try flipping nearby vertices, judge each flip by
    /// relaxing its neighborhood, and keep the best clear improvement.
    /// Returns the number of flips applied.
    fn repair(&self, x: &mut [f64], scratch: &mut Vec<f64>) -> usize {
        let m = self.edges.len();
        let mut r = vec![0.0; m];
        let mut flips = 0;
        for _ in 0..6 {
            self.residual_into(x, &mut r);
            let mut worst: Vec<(usize, f64)> = (0..m)
                .map(|k| (k, r[k].abs()))
                .filter(|&(_, a)| a > 1e-3)
                .collect();
            worst.sort_unstable_by(|a, b| b.1.total_cmp(&a.1));
            let Some(&(bad_edge, bad_mag)) = worst.first() else { break };
            let region = self.region_of_edge(bad_edge);
            let scoring_edges = self.edges_touching(&region);
            let mut best: Option<(f64, Vec<f64>)> = None;
            // Baseline: what local relaxation achieves without any flip.
            scratch.clear();
            scratch.extend_from_slice(x);
            self.relax_region(scratch, &region, 30);
            let base = self.score(scratch, &scoring_edges);
            if std::env::var_os("LINKFORGE_LM_TRACE").is_some() {
                eprintln!(
                    "  repair: edge {bad_edge} |r|={bad_mag:.2e} region {} base {base:.3e}",
                    region.len()
                );
            }
            for &w in &region {
                // Anchor line: the two best-satisfied bars at w.
                let mut anchors: Vec<(f64, Complex64)> = self.incident[w]
                    .iter()
                    .map(|&k| {
                        let (_, other) = self.edge_ends(x, k, w);
                        (r[k].abs(), other)
                    })
                    .collect();
                anchors.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if anchors.len() < 2 {
                    continue;
                }
                let (a, b) = (anchors[0].1, anchors[1].1);
                if (a - b).norm() < 1e-9 {
                    continue;
                }
                let dir = (b - a) / (b - a).norm();
                let rot = dir * dir;
                let here = Complex64::new(x[2 * w], x[2 * w + 1]);
                let flipped = a + rot * (here - a).conj();
                if (flipped - here).norm() < 1e-12 {
                    continue;
                }
                scratch.clear();
                scratch.extend_from_slice(x);
                scratch[2 * w] = flipped.re;
                scratch[2 * w + 1] = flipped.im;
                self.relax_region(scratch, &region, 30);
                let s = self.score(scratch, &scoring_edges);
                if std::env::var_os("LINKFORGE_LM_TRACE").is_some() {
                    eprintln!("    flip {w}: score {s:.3e}");
                }
                if s < 0.9 * base && best.as_ref().map_or(true, |(bs, _)| s < *bs) {
                    best = Some((s, scratch.clone()));
                }
            }
            match best {
                Some((_, better)) => {
                    x.copy_from_slice(&better);
                    flips += 1;
                }
                None => break,
            }
        }
        flips
    }

    /// Solve L L^T x = b with the factor produced by [`Self::cholesky`].
    fn solve_factored(&self, l: &[f64], b: &mut [f64]) {
        let n = self.n_scalars();
        for i in 0..n {
            let si = self.row_start[i];
            let mut sum = b[i];
            for k in si..i {
                sum -= l[self.row_offset[i] + (k - si)] * b[k];
            }
            b[i] = sum / l[self.row_offset[i] + (i - si)];
        }
        for i in (0..n).rev() {
            let si = self.row_start[i];
            b[i] /= l[self.row_offset[i] + (i - si)];
            let bi = b[i];
            for k in si..i {
                b[k] -= l[self.row_offset[i] + (k - si)] * bi;
            }
        }
    }
}

/// Reverse Cuthill-McKee over the free-vertex adjacency, for a tight profile.
fn rcm_order(l: &Linkage, free: &[VertexId]) -> Vec<VertexId> {
    let index: BTreeMap<&VertexId, usize> = free.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
    for e in l.edges() {
        if let (Some(&i), Some(&j)) = (index.get(&e.u), index.get(&e.v)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; free.len()];
    let mut order: Vec<usize> = Vec::with_capacity(free.len());
    loop {
        let root = match (0..free.len()).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
            Some(r) => r,
            None => break,
        };
        visited[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_unstable_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order.into_iter().map(|i| free[i].clone()).collect()
}

/// Breadth-first randomized placement from the fixed vertices outwards.
///
/// A vertex with two already-placed neighbors goes to a random intersection
/// of the two bar circles (exact for all the triangle substructures in the
/// gadget constructions); otherwise it goes to bar distance from one placed
/// neighbor in a random direction. Only loop-closure error remains for the
/// iteration to remove, and the random side/angle choices still reach every
/// branch of the configuration space.
fn scatter_init(
    l: &Linkage,
    fixed_pos: &BTreeMap<VertexId, Complex64>,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<VertexId, Complex64> {
    let mut adj: BTreeMap<&VertexId, Vec<(&VertexId, f64)>> = BTreeMap::new();
    for e in l.edges() {
        adj.entry(&e.u).or_default().push((&e.v, e.len));
        adj.entry(&e.v).or_default().push((&e.u, e.len));
    }
    let mut pos: BTreeMap<VertexId, Complex64> = fixed_pos.clone();
    let mut queue: std::collections::VecDeque<VertexId> = fixed_pos.keys().cloned().collect();
    let spread = l.total_edge_length().max(1.0);
    // Relative misfit of a candidate against every already-placed neighbor.
    let misfit = |pos: &BTreeMap<VertexId, Complex64>, w: &VertexId, at: Complex64| -> f64 {
        let mut worst: f64 = 0.0;
        for (n, len) in adj.get(w).into_iter().flatten() {
            if let Some(&pn) = pos.get(*n) {
                worst = worst.max(((at - pn).norm() - len).abs() / len.max(1e-12));
            }
        }
        worst
    };
    loop {
        while let Some(u) = queue.pop_front() {
            let pu = pos[&u];
            let Some(nbs) = adj.get(&u) else { continue };
            for (w, len) in nbs {
                if pos.contains_key(*w) {
                    continue;
                }
                let preferred =
                    if rng.gen::<bool>() { crate::geom::Side::Plus } else { crate::geom::Side::Minus };
                // With a second placed anchor, both intersection sides are
                // candidates; score them against all placed neighbors so
                // that forced placements come out consistent, while genuine
                // two-fold branches stay a coin flip.
                let anchor = adj
                    .get(*w)
                    .into_iter()
                    .flatten()
                    .find(|(n, _)| *n != &u && pos.contains_key(*n));
                let at = match anchor {
                    Some((n, len2)) => {
                        let first =
                            crate::geom::circle_intersection(pu, *len, pos[*n], *len2, preferred);
                        let second = crate::geom::circle_intersection(
                            pu,
                            *len,
                            pos[*n],
                            *len2,
                            preferred.flipped(),
                        );
                        match (first, second) {
                            (Some(p1), Some(p2)) => {
                                let (m1, m2) = (misfit(&pos, w, p1), misfit(&pos, w, p2));
                                // Rounding noise must not decide genuine
                                // ties, or every restart collapses onto the
                                // same branch choice.
                                if m1 <= m2 + 1e-9 {
                                    Some(p1)
                                } else {
                                    Some(p2)
                                }
                            }
                            (a, b) => a.or(b),
                        }
                    }
                    None => None,
                };
                let at =
                    at.unwrap_or_else(|| pu + len * unit(rng.gen::<f64>() * std::f64::consts::TAU));
                pos.insert((*w).clone(), at);
                queue.push_back((*w).clone());
            }
        }
        // Seed the next unreached component (or isolated vertex) at random.
        match l.vertices().find(|v| !pos.contains_key(*v)) {
            Some(v) => {
                pos.insert(v.clone(), crate::geom::sample_disk(rng, spread));
                queue.push_back(v.clone());
            }
            None => break,
        }
    }
    pos
}

/// Find a realization of the problem's linkage with its pins plus the
/// caller-fixed vertices. Deterministic given the init policy.
pub fn solve(problem: &SolveProblem, opts: &SolveOptions) -> SolveResult {
    let l = problem.linkage;
    // Boundary conditions inconsistent with pins make the problem trivially
    // infeasible.
    for (v, &z) in &problem.fixed {
        if let Some(p) = l.pin_of(v) {
            if (p - z).norm() > crate::TOL_EXACT {
                return SolveResult {
                    status: SolveStatus::Infeasible,
                    realization: None,
                    residual_norm: f64::INFINITY,
                    max_edge_residual: f64::INFINITY,
                    deep: false,
                    iterations: 0,
                    final_state: Realization::default(),
                };
            }
        }
    }
    let sys = System::build(l, &problem.fixed, opts);
    let mut fixed_pos: BTreeMap<VertexId, Complex64> = l.pins().clone();
    for (v, &z) in &problem.fixed {
        fixed_pos.insert(v.clone(), z);
    }

    let init_positions: BTreeMap<VertexId, Complex64> = match &problem.init {
        InitPolicy::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            scatter_init(l, &fixed_pos, &mut rng)
        }
        InitPolicy::WarmStart(r) => r.positions().clone(),
        InitPolicy::WarmStartPerturbed { base, sigma, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            base.positions()
                .iter()
                .map(|(v, &z)| {
                    (v.clone(), z + Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 2.0 * *sigma)
                })
                .collect()
        }
    };

    let n = sys.n_scalars();
    let mut x = vec![0.0f64; n];
    for (k, v) in sys.free.iter().enumerate() {
        let z = init_positions.get(v).copied().unwrap_or(Complex64::new(0.0, 0.0));
        x[2 * k] = z.re;
        x[2 * k + 1] = z.im;
    }

    let m = sys.edges.len();
    let mut r = vec![0.0f64; m];
    let mut r_try = vec![0.0f64; m];
    let mut gradient = vec![0.0f64; n];
    let mut a = vec![0.0f64; sys.row_offset[n]];
    let mut factor = vec![0.0f64; sys.row_offset[n]];
    let mut step = vec![0.0f64; n];
    let mut x_try = vec![0.0f64; n];

    sys.residual_into(&x, &mut r);
    let mut norm2: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;
    let mut stalled = false;
    let mut repairs = 0;
    let mut scratch: Vec<f64> = Vec::new();
    let mut checkpoint = (0usize, norm2);
    let tol2 = sys.tol * sys.tol;

    while norm2 > tol2 && iterations < opts.max_iterations && !stalled {
        iterations += 1;
        // Exact second-order term only in the endgame, once the iterate is
        // near a solution; far from one it can make the model indefinite.
        let second_order = norm2 < 1e-8;
        sys.normal_equations(&x, &r, &mut a, &mut gradient, second_order);
        let mut accepted = false;
        while lambda <= 1e14 {
            factor.copy_from_slice(&a);
            for i in 0..n {
                let di = sys.row_offset[i] + (i - sys.row_start[i]);
                factor[di] = a[di] + lambda * a[di].max(1e-12);
            }
            if sys.cholesky(&mut factor) {
                for i in 0..n {
                    step[i] = -gradient[i];
                }
                sys.solve_factored(&factor, &mut step);
                // Backtrack on the step length: full steps overshoot in the
                // quadratically degenerate directions the interior joints
                // create (tangent circle pairs), where plain LM crawls. Near
                // fold cusps the overshoot spans several orders, so the
                // backtracking goes deep.
                let mut alpha = 1.0;
                for _ in 0..12 {
                    for i in 0..n {
                        x_try[i] = x[i] + alpha * step[i];
                    }
                    sys.residual_into(&x_try, &mut r_try);
                    let try_norm2: f64 = r_try.iter().map(|v| v * v).sum();
                    if std::env::var_os("LINKFORGE_LM_TRACE").is_some() {
                        eprintln!(
                            "  iter {iterations} so {second_order} lambda {lambda:.1e} alpha {alpha} norm {:.6e} try {:.6e}",
                            norm2.sqrt(),
                            try_norm2.sqrt()
                        );
                    }
                    if try_norm2 < norm2 {
                        x.copy_from_slice(&x_try);
                        r.copy_from_slice(&r_try);
                        norm2 = try_norm2;
                        lambda = (lambda / opts.lambda_factor).max(1e-15);
                        accepted = true;
                        break;
                    }
                    alpha /= 2.0;
                }
                if accepted {
                    break;
                }
            }
            lambda *= opts.lambda_factor;
        }
        // Fold configurations show up either as hard stalls or as plateaus
        // with essentially no progress; both get a repair try. Honest slow
        // convergence (a few percent per iteration) must not trip this.
        let crawling = accepted
            && iterations - checkpoint.0 >= 60
            && norm2 > 0.98 * checkpoint.1
            && norm2 > 1e-10;
        if !accepted || crawling {
            let mut hopped = false;
            while repairs < opts.max_repairs {
                repairs += 1;
                if sys.repair(&mut x, &mut scratch) == 0 {
                    repairs = opts.max_repairs;
                    break;
                }
                sys.residual_into(&x, &mut r);
                norm2 = r.iter().map(|v| v * v).sum();
                lambda = opts.lambda_init;
                hopped = true;
                break;
            }
            if !accepted && !hopped {
                stalled = true;
            }
            checkpoint = (iterations, norm2);
        } else if iterations - checkpoint.0 >= 60 {
            checkpoint = (iterations, norm2);
        }
    }

    let norm = norm2.sqrt();
    let mut positions = fixed_pos;
    for (k, v) in sys.free.iter().enumerate() {
        positions.insert(v.clone(), Complex64::new(x[2 * k], x[2 * k + 1]));
    }
    let mut max_edge_residual: f64 = 0.0;
    for e in l.edges() {
        let d = (positions[&e.u] - positions[&e.v]).norm();
        max_edge_residual = max_edge_residual.max((d - e.len).abs());
    }
    // Converged means the result is a realization at solver tolerance; the
    // deep norm threshold is the iteration target, not the gate.
    let deep = norm <= sys.tol;
    let converged = deep || max_edge_residual < crate::TOL_SOLVE;
    let status = if converged {
        SolveStatus::Converged
    } else if stalled {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIterations
    };
    let final_state = Realization::new(positions);
    SolveResult {
        status,
        realization: if converged { Some(final_state.clone()) } else { None },
        residual_norm: norm,
        max_edge_residual,
        deep,
        iterations,
        final_state,
    }
}

// ---------------------------------------------------------------------------
// Random-restart sampling
// ---------------------------------------------------------------------------

/// Translate the first vertex to 0, rotate the first distinctly-placed
/// vertex onto the positive real axis, and reflect the first off-axis vertex
/// into the upper half-plane. Quotients out the plane isometries so that
/// congruent realizations of an unpinned linkage compare equal.
pub fn normalize_realization(r: &Realization) -> Realization {
    let mut iter = r.positions().iter();
    let (_, &origin) = match iter.next() {
        Some(p) => p,
        None => return r.clone(),
    };
    let mut rot = Complex64::new(1.0, 0.0);
    for (_, &z) in r.positions().iter() {
        let d = z - origin;
        if d.norm() > 1e-9 {
            rot = d.conj() / d.norm();
            break;
        }
    }
    let mut flip = false;
    for (_, &z) in r.positions().iter() {
        let w = rot * (z - origin);
        if w.im.abs() > 1e-9 {
            flip = w.im < 0.0;
            break;
        }
    }
    Realization::new(
        r.positions()
            .iter()
            .map(|(v, &z)| {
                let mut w = rot * (z - origin);
                if flip {
                    w = w.conj();
                }
                (v.clone(), w)
            })
            .collect(),
    )
}

fn dedup_key(r: &Realization, resolution: f64) -> Vec<(i64, i64)> {
    r.positions()
        .values()
        .map(|z| ((z.re / resolution).round() as i64, (z.im / resolution).round() as i64))
        .collect()
}

pub const DEDUP_RESOLUTION: f64 = 1e-4;

/// `n` random-restart solves; converged realizations, deduplicated at
/// resolution 1e-4 (after isometry normalization when nothing is pinned).
/// Restart `i` uses seed `seed + i`, and results merge in restart order, so
/// identical seeds give identical output.
pub fn sample_configurations(l: &Linkage, n: usize, seed: u64) -> Vec<Realization> {
    sample_configurations_opts(l, n, seed, &SolveOptions::default())
}

pub fn sample_configurations_opts(
    l: &Linkage,
    n: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Vec<Realization> {
    sample_configurations_with_init(l, n, seed, opts, |_| None)
}

/// Random-restart sampling where the caller may supply a warm start per
/// restart (e.g. from a gadget's forward placement); restarts without one
/// fall back to the randomized scatter. Every returned realization is still
/// the generic solver's own converged output.
pub fn sample_configurations_with_init(
    l: &Linkage,
    n: usize,
    seed: u64,
    opts: &SolveOptions,
    init: impl Fn(u64) -> Option<Realization> + Sync,
) -> Vec<Realization> {
    let solutions: Vec<Option<Realization>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let restart_seed = seed.wrapping_add(i as u64);
            let policy = match init(restart_seed) {
                Some(r) => InitPolicy::WarmStart(r),
                None => InitPolicy::Seeded(restart_seed),
            };
            let problem = SolveProblem::new(l, policy);
            let res = solve(&problem, opts);
            if res.deep {
                res.realization
            } else {
                None
            }
        })
        .collect();
    let quotient_isometries = l.pins().is_empty();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for r in solutions.into_iter().flatten() {
        let key = if quotient_isometries {
            dedup_key(&normalize_realization(&r), DEDUP_RESOLUTION)
        } else {
            dedup_key(&r, DEDUP_RESOLUTION)
        };
        if seen.insert(key) {
            out.push(r);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Continuation tracing
// ---------------------------------------------------------------------------

/// Extra help for starting (or re-seeding) a continuation trace.
pub enum TraceInit<'a> {
    /// Random restarts at the path start, previous-step warm starts after.
    Generic,
    /// Warm-start the first step from a known nearby realization.
    Warm(&'a Realization),
    /// A caller-supplied initializer per path parameter (e.g. a gadget's
    /// forward placement); tried whenever the previous-step warm start
    /// fails, and for the first step.
    PerStep(&'a (dyn Fn(f64) -> Option<Realization> + Sync)),
}

/// Drive one vertex along a path and record marker positions, warm-starting
/// each step from the previous realization. Steps that fail to converge are
/// retried by parameter bisection down to a step of 1e-6; if the path truly
/// leaves the feasible set the trace stops and returns what it has.
pub fn trace(
    l: &Linkage,
    drive: &VertexId,
    path: &TracePath,
    markers: &MarkerSet,
    steps: usize,
    seed: u64,
) -> Result<Trace, TraceError> {
    trace_opts(l, drive, path, markers, steps, seed, &SolveOptions::default(), TraceInit::Generic)
}

#[allow(clippy::too_many_arguments)]
pub fn trace_opts(
    l: &Linkage,
    drive: &VertexId,
    path: &TracePath,
    markers: &MarkerSet,
    steps: usize,
    seed: u64,
    opts: &SolveOptions,
    init: TraceInit<'_>,
) -> Result<Trace, TraceError> {
    if !l.has_vertex(drive) {
        return Err(TraceError::UnknownVertex(drive.clone()));
    }
    for m in markers.iter() {
        if !l.has_vertex(m) {
            return Err(TraceError::UnknownVertex(m.clone()));
        }
    }
    let steps = steps.max(2);

    // Accept deep solutions, with a graded fallback for steps at stacked
    // tangencies (taut cables, interior joints at their limits) where the
    // iteration bottoms out three orders above the deep threshold while the
    // structural vertices stay accurate.
    let accept = 1e3 * opts.tol_residual_norm;
    let solve_at = |t: f64, policy: InitPolicy| -> Option<Realization> {
        let problem = SolveProblem::new(l, policy).fix(drive.clone(), path.at(t));
        let res = solve(&problem, opts);
        if res.deep || (res.realization.is_some() && res.residual_norm <= accept) {
            res.realization
        } else {
            None
        }
    };
    let hint_at = |t: f64| -> Option<Realization> {
        match &init {
            TraceInit::PerStep(f) => f(t).and_then(|r| solve_at(t, InitPolicy::WarmStart(r))),
            _ => None,
        }
    };

    // Step 0: explicit warm start, per-step hint, then random restarts.
    let mut current = match &init {
        TraceInit::Warm(r) => solve_at(0.0, InitPolicy::WarmStart((*r).clone())),
        _ => None,
    };
    if current.is_none() {
        current = hint_at(0.0);
    }
    if current.is_none() {
        for attempt in 0..200 {
            current = solve_at(0.0, InitPolicy::Seeded(seed.wrapping_add(attempt)));
            if current.is_some() {
                break;
            }
        }
    }
    let mut current = current.ok_or(TraceError::StartInfeasible)?;

    let mut rows = vec![current.restrict(markers)];
    let mut t_prev = 0.0f64;
    'outer: for k in 1..steps {
        let t_target = k as f64 / (steps - 1) as f64;
        // Bisect toward the target until the warm start carries.
        while t_prev < t_target {
            let mut t_next = t_target;
            loop {
                let stepped = solve_at(t_next, InitPolicy::WarmStart(current.clone()))
                    .or_else(|| hint_at(t_next));
                match stepped {
                    Some(r) => {
                        current = r;
                        t_prev = t_next;
                        break;
                    }
                    None => {
                        let dt = t_next - t_prev;
                        if dt < 1e-6 {
                            break 'outer;
                        }
                        t_next = t_prev + dt / 2.0;
                    }
                }
            }
        }
        rows.push(current.restrict(markers));
    }
    let completed = rows.len();
    Ok(Trace { markers: markers.0.clone(), rows, completed })
}
