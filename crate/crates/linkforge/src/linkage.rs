//! Linkage data model and the graph surgeries everything else builds on.
//!
//! A [`Linkage`] is a finite vertex set, a set of positively-weighted edges
//! (the bar lengths) and a partial pinning of vertices to plane points. A
//! [`Realization`] assigns every vertex a plane point so that pins are hit
//! exactly and every bar has exactly its stated length. Linkages are
//! immutable values: every operation returns a new linkage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::cross;

/// Name of a vertex, unique within a linkage.
///
/// Sub-linkages merged by [`Linkage::splice`] or [`Linkage::disjoint_union`]
/// get a `prefix/` namespace so merges stay collision-free and reproducible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Self {
        VertexId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn namespaced(&self, prefix: &str) -> VertexId {
        VertexId(format!("{prefix}/{}", self.0))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_owned())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId(s)
    }
}

/// How an edge is drawn and what role it plays.
///
/// `Brace` marks the rigidifying edge between midpoints of opposite sides of
/// a parallelogram; `Cable` marks the two-bar chains that simulate cables and
/// telescoping edges. Both render gray. The distinction matters to tests that
/// knock out rigidification specifically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum EdgeKind {
    #[default]
    Bar,
    Brace,
    Cable,
}

/// An undirected bar between two vertices with a fixed positive length.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub len: f64,
    pub kind: EdgeKind,
}

impl Edge {
    /// Canonical form: endpoint names sorted.
    fn canonical(u: VertexId, v: VertexId, len: f64, kind: EdgeKind) -> Edge {
        if u <= v {
            Edge { u, v, len, kind }
        } else {
            Edge { u: v, v: u, len, kind }
        }
    }

    pub fn touches(&self, w: &VertexId) -> bool {
        &self.u == w || &self.v == w
    }
}

/// Ordered list of marked vertices whose joint positions we care about.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkerSet(pub Vec<VertexId>);

impl MarkerSet {
    pub fn new(ids: impl IntoIterator<Item = VertexId>) -> Self {
        MarkerSet(ids.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &VertexId> {
        self.0.iter()
    }
}

/// A plane isometry z -> rot*z + trans, or z -> rot*conj(z) + trans when
/// `reflect` is set. `rot` must be unimodular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanMotion {
    pub rot: Complex64,
    pub reflect: bool,
    pub trans: Complex64,
}

impl EuclideanMotion {
    pub fn identity() -> Self {
        EuclideanMotion { rot: Complex64::new(1.0, 0.0), reflect: false, trans: Complex64::new(0.0, 0.0) }
    }

    pub fn rotation(theta: f64) -> Self {
        EuclideanMotion { rot: crate::geom::unit(theta), reflect: false, trans: Complex64::new(0.0, 0.0) }
    }

    pub fn translation(z: Complex64) -> Self {
        EuclideanMotion { rot: Complex64::new(1.0, 0.0), reflect: false, trans: z }
    }

    /// The reflection fixing the line through `a` and `b` (a != b).
    pub fn reflection_across(a: Complex64, b: Complex64) -> Self {
        let dir = (b - a) / (b - a).norm();
        // z -> a + dir^2 * conj(z - a)
        let rot = dir * dir;
        EuclideanMotion { rot, reflect: true, trans: a - rot * a.conj() }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        if self.reflect {
            self.rot * z.conj() + self.trans
        } else {
            self.rot * z + self.trans
        }
    }

    pub fn is_unimodular(&self, tol: f64) -> bool {
        (self.rot.norm() - 1.0).abs() <= tol
    }
}

/// One defect found by [`Linkage::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ZeroLengthEdge { u: VertexId, v: VertexId, len: f64 },
    SelfEdge { v: VertexId },
    DuplicateEdge { u: VertexId, v: VertexId },
    DanglingVertex { v: VertexId },
    EmptyVertexName,
    PinnedPairInconsistent { u: VertexId, v: VertexId, len: f64, pin_dist: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroLengthEdge { u, v, len } => {
                write!(f, "zero-length edge {u}-{v} (len {len})")
            }
            Violation::SelfEdge { v } => write!(f, "self-edge at {v}"),
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge {u}-{v}"),
            Violation::DanglingVertex { v } => write!(f, "edge references unknown vertex {v}"),
            Violation::EmptyVertexName => write!(f, "empty vertex name"),
            Violation::PinnedPairInconsistent { u, v, len, pin_dist } => write!(
                f,
                "pinned pair inconsistent: edge {u}-{v} has length {len} but pins are {pin_dist} apart"
            ),
        }
    }
}

/// Report-valued result of [`Linkage::validate`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkageError {
    #[error("edge length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("self-edge at vertex {0}")]
    SelfEdge(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {0} is already pinned at a different point")]
    AlreadyPinned(VertexId),
    #[error("vertex {0} is not pinned")]
    NotPinned(VertexId),
    #[error("pin conflict merging {0} and {1}: pinned at different points")]
    PinConflict(VertexId, VertexId),
    #[error("identification pairs must be distinct on each side")]
    BadIdentification,
    #[error("rescale factor must be positive, got {0}")]
    BadScale(f64),
    #[error("motion is not an isometry (|rot| != 1)")]
    NotIsometry,
    #[error("midpoint fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("no edge between {0} and {1}")]
    NoSuchEdge(VertexId, VertexId),
    #[error("{0}")]
    BadParameter(String),
    #[error("anchor frame not present")]
    FrameAbsent,
}

/// A planar linkage: vertices, bars with lengths, and pinned vertices.
#[derive(Debug, Clone, Default)]
pub struct Linkage {
    vertices: BTreeSet<VertexId>,
    edges: Vec<Edge>,
    pins: BTreeMap<VertexId, Complex64>,
}

impl PartialEq for Linkage {
    /// Equality up to edge order: same vertices, same pin map, same edge
    /// multiset.
    fn eq(&self, other: &Self) -> bool {
        if self.vertices != other.vertices || self.pins != other.pins {
            return false;
        }
        let key = |e: &Edge| (e.u.clone(), e.v.clone(), e.len.to_bits(), e.kind);
        let mut a: Vec<_> = self.edges.iter().map(key).collect();
        let mut b: Vec<_> = other.edges.iter().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Positions where [`Linkage::add_anchor_frame`] pins its four anchors.
pub const ANCHOR_POSITIONS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, -1.0)];

/// Skipped coincident pairs reported by [`Linkage::add_anchor_frame`].
#[derive(Debug, Clone, Default)]
pub struct AnchorFrameReport {
    pub anchors: Vec<VertexId>,
    pub skipped_coincident: Vec<(VertexId, VertexId)>,
}

impl Linkage {
    pub fn new() -> Self {
        Linkage::default()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.vertices.iter()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_vertex(&self, v: &VertexId) -> bool {
        self.vertices.contains(v)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pins(&self) -> &BTreeMap<VertexId, Complex64> {
        &self.pins
    }

    pub fn pin_of(&self, v: &VertexId) -> Option<Complex64> {
        self.pins.get(v).copied()
    }

    pub fn total_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    pub fn add_vertex(&mut self, v: impl Into<VertexId>) -> VertexId {
        let v = v.into();
        self.vertices.insert(v.clone());
        v
    }

    pub fn add_edge(
        &mut self,
        u: impl Into<VertexId>,
        v: impl Into<VertexId>,
        len: f64,
    ) -> Result<(), LinkageError> {
        self.add_edge_kind(u, v, len, EdgeKind::Bar)
    }

    pub fn add_edge_kind(
        &mut self,
        u: impl Into<VertexId>,
        v: impl Into<VertexId>,
        len: f64,
        kind: EdgeKind,
    ) -> Result<(), LinkageError> {
        let (u, v) = (u.into(), v.into());
        if !(len > 0.0) {
            return Err(LinkageError::NonPositiveLength(len));
        }
        if u == v {
            return Err(LinkageError::SelfEdge(u));
        }
        self.vertices.insert(u.clone());
        self.vertices.insert(v.clone());
        self.edges.push(Edge::canonical(u, v, len, kind));
        Ok(())
    }

    pub(crate) fn set_pin(&mut self, v: impl Into<VertexId>, z: Complex64) {
        let v = v.into();
        self.vertices.insert(v.clone());
        self.pins.insert(v, z);
    }

    pub fn edge_between(&self, u: &VertexId, v: &VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| (e.touches(u) && e.touches(v)) && u != v)
    }

    /// Check structural consistency. Inconsistencies are reported, never
    /// fatal: a linkage whose pins contradict an edge simply has an empty
    /// configuration space.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for v in &self.vertices {
            if v.as_str().is_empty() {
                violations.push(Violation::EmptyVertexName);
            }
        }
        let mut seen: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for e in &self.edges {
            if !(e.len > 0.0) {
                violations.push(Violation::ZeroLengthEdge { u: e.u.clone(), v: e.v.clone(), len: e.len });
            }
            if e.u == e.v {
                violations.push(Violation::SelfEdge { v: e.u.clone() });
            }
            for w in [&e.u, &e.v] {
                if !self.vertices.contains(w) {
                    violations.push(Violation::DanglingVertex { v: w.clone() });
                }
            }
            if !seen.insert((e.u.clone(), e.v.clone())) {
                violations.push(Violation::DuplicateEdge { u: e.u.clone(), v: e.v.clone() });
            }
            if let (Some(&pu), Some(&pv)) = (self.pins.get(&e.u), self.pins.get(&e.v)) {
                let d = (pu - pv).norm();
                if (d - e.len).abs() > crate::TOL_EXACT {
                    violations.push(Violation::PinnedPairInconsistent {
                        u: e.u.clone(),
                        v: e.v.clone(),
                        len: e.len,
                        pin_dist: d,
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Tagged union: vertices of `self` are prefixed `a/`, vertices of
    /// `other` are prefixed `b/`. The semiconfiguration space of the result
    /// is the cartesian product of the two parts' spaces.
    pub fn disjoint_union(&self, other: &Linkage) -> Linkage {
        self.disjoint_union_with(other, "a", "b")
    }

    pub fn disjoint_union_with(&self, other: &Linkage, self_prefix: &str, other_prefix: &str) -> Linkage {
        let mut out = self.renamed(|v| v.namespaced(self_prefix));
        let o = other.renamed(|v| v.namespaced(other_prefix));
        out.vertices.extend(o.vertices);
        out.edges.extend(o.edges);
        out.pins.extend(o.pins);
        out
    }

    fn renamed(&self, f: impl Fn(&VertexId) -> VertexId) -> Linkage {
        Linkage {
            vertices: self.vertices.iter().map(&f).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge::canonical(f(&e.u), f(&e.v), e.len, e.kind))
                .collect(),
            pins: self.pins.iter().map(|(v, &z)| (f(v), z)).collect(),
        }
    }

    /// Quotient of the tagged union of `self` and `inner` that merges each
    /// identified pair into a single vertex (keeping the outer name).
    /// Non-identified inner vertices get the `inner_prefix/` namespace.
    /// Merged vertices inherit both pins only when those agree.
    pub fn splice(
        &self,
        inner: &Linkage,
        inner_prefix: &str,
        identify: &[(VertexId, VertexId)],
    ) -> Result<Linkage, LinkageError> {
        let mut outer_seen = BTreeSet::new();
        let mut inner_seen = BTreeSet::new();
        for (o, i) in identify {
            if !self.vertices.contains(o) {
                return Err(LinkageError::UnknownVertex(o.clone()));
            }
            if !inner.vertices.contains(i) {
                return Err(LinkageError::UnknownVertex(i.clone()));
            }
            if !outer_seen.insert(o.clone()) || !inner_seen.insert(i.clone()) {
                return Err(LinkageError::BadIdentification);
            }
        }
        let map = |v: &VertexId| -> VertexId {
            identify
                .iter()
                .find(|(_, i)| i == v)
                .map(|(o, _)| o.clone())
                .unwrap_or_else(|| v.namespaced(inner_prefix))
        };
        let mut out = self.clone();
        for v in &inner.vertices {
            out.vertices.insert(map(v));
        }
        for e in &inner.edges {
            let ne = Edge::canonical(map(&e.u), map(&e.v), e.len, e.kind);
            // Exact duplicates carry no new constraint.
            if !out
                .edges
                .iter()
                .any(|x| x.u == ne.u && x.v == ne.v && x.len == ne.len && x.kind == ne.kind)
            {
                out.edges.push(ne);
            }
        }
        for (v, &z) in &inner.pins {
            let nv = map(v);
            match out.pins.get(&nv) {
                Some(&existing) if (existing - z).norm() > crate::TOL_EXACT => {
                    return Err(LinkageError::PinConflict(nv, v.clone()));
                }
                _ => {
                    out.pins.insert(nv, z);
                }
            }
        }
        Ok(out)
    }

    /// Pin vertex `v` at `z`. Pinning an already-pinned vertex elsewhere is
    /// an error; re-pinning at the same point is a no-op.
    pub fn pin(&self, v: &VertexId, z: Complex64) -> Result<Linkage, LinkageError> {
        if !self.vertices.contains(v) {
            return Err(LinkageError::UnknownVertex(v.clone()));
        }
        if let Some(&existing) = self.pins.get(v) {
            if (existing - z).norm() > crate::TOL_EXACT {
                return Err(LinkageError::AlreadyPinned(v.clone()));
            }
        }
        let mut out = self.clone();
        out.pins.insert(v.clone(), z);
        Ok(out)
    }

    pub fn unpin(&self, v: &VertexId) -> Result<Linkage, LinkageError> {
        if !self.vertices.contains(v) {
            return Err(LinkageError::UnknownVertex(v.clone()));
        }
        if !self.pins.contains_key(v) {
            return Err(LinkageError::NotPinned(v.clone()));
        }
        let mut out = self.clone();
        out.pins.remove(v);
        Ok(out)
    }

    /// Move every pin by the isometry `g`; lengths are unchanged.
    pub fn transform(&self, g: &EuclideanMotion) -> Result<Linkage, LinkageError> {
        if !g.is_unimodular(crate::TOL_EXACT) {
            return Err(LinkageError::NotIsometry);
        }
        let mut out = self.clone();
        for z in out.pins.values_mut() {
            *z = g.apply(*z);
        }
        Ok(out)
    }

    /// Multiply every edge length and every pin coordinate by `k > 0`.
    pub fn rescale(&self, k: f64) -> Result<Linkage, LinkageError> {
        if !(k > 0.0) {
            return Err(LinkageError::BadScale(k));
        }
        let mut out = self.clone();
        for e in &mut out.edges {
            e.len *= k;
        }
        for z in out.pins.values_mut() {
            *z *= k;
        }
        Ok(out)
    }

    fn fresh_name(&self, base: &str) -> VertexId {
        let mut name = VertexId::new(base);
        let mut n = 1;
        while self.vertices.contains(&name) {
            name = VertexId::new(format!("{base}.{n}"));
            n += 1;
        }
        name
    }

    /// Ensure vertices pinned at 0, 1, i and -1-i exist (adding isolated
    /// pinned vertices as needed), then join every pair of pinned vertices at
    /// distinct positions by an edge of exactly their pin distance.
    /// Coincident pinned pairs are skipped and reported; a zero-length edge
    /// is never added.
    pub fn add_anchor_frame(&self) -> (Linkage, AnchorFrameReport) {
        let mut out = self.clone();
        let mut report = AnchorFrameReport::default();
        let names = ["anchor0", "anchor1", "anchorI", "anchorQ"];
        for ((x, y), base) in ANCHOR_POSITIONS.iter().zip(names) {
            let z = Complex64::new(*x, *y);
            let existing = out
                .pins
                .iter()
                .find(|(_, &p)| (p - z).norm() <= crate::TOL_EXACT)
                .map(|(v, _)| v.clone());
            let v = match existing {
                Some(v) => v,
                None => {
                    let v = out.fresh_name(base);
                    out.set_pin(v.clone(), z);
                    v
                }
            };
            report.anchors.push(v);
        }
        let pinned: Vec<(VertexId, Complex64)> = out.pins.iter().map(|(v, &z)| (v.clone(), z)).collect();
        for i in 0..pinned.len() {
            for j in (i + 1)..pinned.len() {
                let (u, zu) = &pinned[i];
                let (v, zv) = &pinned[j];
                let d = (zu - zv).norm();
                if d <= crate::TOL_EXACT {
                    report.skipped_coincident.push((u.clone(), v.clone()));
                    continue;
                }
                if out.edge_between(u, v).is_none() {
                    out.edges.push(Edge::canonical(u.clone(), v.clone(), d, EdgeKind::Bar));
                }
            }
        }
        (out, report)
    }

    fn anchor_vertices(&self) -> Option<[VertexId; 4]> {
        let mut found: Vec<VertexId> = Vec::new();
        for (x, y) in ANCHOR_POSITIONS {
            let z = Complex64::new(x, y);
            let v = self
                .pins
                .iter()
                .find(|(_, &p)| (p - z).norm() <= crate::TOL_EXACT)
                .map(|(v, _)| v.clone())?;
            found.push(v);
        }
        found.try_into().ok()
    }

    /// Unpin every pinned vertex except the first `keep` canonical anchors
    /// (kept in the order 0, then 1, then i). Requires the anchor frame:
    /// all four anchors pinned and all pinned pairs joined by edges.
    pub fn relax_anchors(&self, keep: usize) -> Result<Linkage, LinkageError> {
        if keep > 3 {
            return Err(LinkageError::BadParameter(format!("keep must be in 0..=3, got {keep}")));
        }
        let anchors = self.anchor_vertices().ok_or(LinkageError::FrameAbsent)?;
        let pinned: Vec<(VertexId, Complex64)> = self.pins.iter().map(|(v, &z)| (v.clone(), z)).collect();
        for i in 0..pinned.len() {
            for j in (i + 1)..pinned.len() {
                let (u, zu) = &pinned[i];
                let (v, zv) = &pinned[j];
                if (zu - zv).norm() > crate::TOL_EXACT && self.edge_between(u, v).is_none() {
                    return Err(LinkageError::FrameAbsent);
                }
            }
        }
        let kept: BTreeSet<&VertexId> = anchors.iter().take(keep).collect();
        let mut out = self.clone();
        out.pins.retain(|v, _| kept.contains(v));
        Ok(out)
    }

    /// Connected components as vertex sets.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut parent: BTreeMap<&VertexId, &VertexId> = self.vertices.iter().map(|v| (v, v)).collect();
        fn find<'a>(parent: &BTreeMap<&'a VertexId, &'a VertexId>, mut v: &'a VertexId) -> &'a VertexId {
            while parent[v] != v {
                v = parent[v];
            }
            v
        }
        for e in &self.edges {
            let (ru, rv) = (find(&parent, &e.u), find(&parent, &e.v));
            if ru != rv {
                parent.insert(ru, rv);
            }
        }
        let mut comps: BTreeMap<&VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for v in &self.vertices {
            comps.entry(find(&parent, v)).or_default().insert(v.clone());
        }
        comps.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Maximum absolute |distance - length| over all edges, plus pin
    /// mismatches, for a candidate assignment of positions.
    pub fn max_residual(&self, positions: &BTreeMap<VertexId, Complex64>) -> f64 {
        let mut worst: f64 = 0.0;
        for e in &self.edges {
            match (positions.get(&e.u), positions.get(&e.v)) {
                (Some(&a), Some(&b)) => worst = worst.max(((a - b).norm() - e.len).abs()),
                _ => return f64::INFINITY,
            }
        }
        for (v, &z) in &self.pins {
            match positions.get(v) {
                Some(&p) => worst = worst.max((p - z).norm()),
                None => return f64::INFINITY,
            }
        }
        worst
    }
}

/// A total assignment of plane points to the vertices of some linkage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Realization {
    positions: BTreeMap<VertexId, Complex64>,
}

impl Realization {
    pub fn new(positions: BTreeMap<VertexId, Complex64>) -> Self {
        Realization { positions }
    }

    pub fn get(&self, v: &VertexId) -> Option<Complex64> {
        self.positions.get(v).copied()
    }

    pub fn position(&self, v: &VertexId) -> Complex64 {
        self.positions[v]
    }

    pub fn positions(&self) -> &BTreeMap<VertexId, Complex64> {
        &self.positions
    }

    pub fn set(&mut self, v: VertexId, z: Complex64) {
        self.positions.insert(v, z);
    }

    /// Whether this is a valid realization of `l` within tolerance `tol`.
    pub fn satisfies(&self, l: &Linkage, tol: f64) -> bool {
        l.max_residual(&self.positions) <= tol
    }

    /// Apply a plane isometry to every position.
    pub fn transformed(&self, g: &EuclideanMotion) -> Realization {
        Realization {
            positions: self.positions.iter().map(|(v, &z)| (v.clone(), g.apply(z))).collect(),
        }
    }

    /// Restriction to a marker set, in marker order.
    pub fn restrict(&self, w: &MarkerSet) -> Vec<Complex64> {
        w.iter().map(|v| self.positions[v]).collect()
    }

    /// Collinearity residual of three placed vertices.
    pub fn collinearity_residual(&self, a: &VertexId, b: &VertexId, c: &VertexId) -> f64 {
        let (pa, pb, pc) = (self.positions[a], self.positions[b], self.positions[c]);
        cross(pb - pa, pc - pa).abs()
    }
}

impl FromIterator<(VertexId, Complex64)> for Realization {
    fn from_iter<T: IntoIterator<Item = (VertexId, Complex64)>>(iter: T) -> Self {
        Realization { positions: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Linkage {
        let mut l = Linkage::new();
        l.add_edge("A", "B", 1.0).unwrap();
        l.add_edge("B", "C", 1.0).unwrap();
        l.add_edge("A", "C", 1.0).unwrap();
        l
    }

    #[test]
    fn validate_clean_triangle() {
        assert!(triangle().validate().is_ok());
    }

    #[test]
    fn zero_length_edge_rejected_and_reported() {
        let mut l = Linkage::new();
        assert!(matches!(l.add_edge("A", "B", 0.0), Err(LinkageError::NonPositiveLength(_))));
        // A hand-built doc could still contain one; validate must flag it.
        l.add_vertex("A");
        l.add_vertex("B");
        l.edges.push(Edge::canonical("A".into(), "B".into(), 0.0, EdgeKind::Bar));
        let report = l.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ZeroLengthEdge { .. })));
    }

    #[test]
    fn pinned_pair_inconsistency_is_reported_not_fatal() {
        let mut l = Linkage::new();
        l.add_edge("A", "B", 3.0).unwrap();
        let l = l.pin(&"A".into(), Complex64::new(0.0, 0.0)).unwrap();
        let l = l.pin(&"B".into(), Complex64::new(1.0, 0.0)).unwrap();
        let report = l.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::PinnedPairInconsistent { .. }));
    }

    #[test]
    fn disjoint_union_counts() {
        let mut l2 = Linkage::new();
        l2.add_edge("X", "Y", 2.0).unwrap();
        let u = triangle().disjoint_union(&l2);
        assert_eq!(u.vertex_count(), 5);
        assert_eq!(u.edges().len(), 4);
        assert!(u.has_vertex(&"a/A".into()));
        assert!(u.has_vertex(&"b/X".into()));
    }

    #[test]
    fn union_with_empty_is_isomorphic_copy() {
        let t = triangle();
        let u = t.disjoint_union(&Linkage::new());
        assert_eq!(u.vertex_count(), t.vertex_count());
        assert_eq!(u.edges().len(), t.edges().len());
        // Same edge-length multiset.
        let mut a: Vec<f64> = t.edges().iter().map(|e| e.len).collect();
        let mut b: Vec<f64> = u.edges().iter().map(|e| e.len).collect();
        a.sort_unstable_by(f64::total_cmp);
        b.sort_unstable_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn splice_merges_and_counts() {
        let outer = triangle();
        let mut inner = Linkage::new();
        inner.add_edge("P", "Q", 2.0).unwrap();
        let s = outer
            .splice(&inner, "in", &[("A".into(), "P".into())])
            .unwrap();
        assert_eq!(s.vertex_count(), 3 + 2 - 1);
        assert!(s.has_vertex(&"A".into()));
        assert!(s.has_vertex(&"in/Q".into()));
        assert!(s.edge_between(&"A".into(), &"in/Q".into()).is_some());
    }

    #[test]
    fn splice_pin_conflict() {
        let outer = triangle().pin(&"A".into(), Complex64::new(0.0, 0.0)).unwrap();
        let mut inner = Linkage::new();
        inner.add_vertex("P");
        let inner = inner.pin(&"P".into(), Complex64::new(1.0, 0.0)).unwrap();
        let err = outer.splice(&inner, "in", &[("A".into(), "P".into())]);
        assert!(matches!(err, Err(LinkageError::PinConflict(..))));
    }

    #[test]
    fn pin_unpin_round_trip() {
        let l = triangle();
        let p = l.pin(&"A".into(), Complex64::new(2.0, 3.0)).unwrap();
        let back = p.unpin(&"A".into()).unwrap();
        assert_eq!(back, l);
        let again = back.pin(&"A".into(), Complex64::new(2.0, 3.0)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn double_pin_elsewhere_errors() {
        let l = triangle().pin(&"A".into(), Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            l.pin(&"A".into(), Complex64::new(1.0, 0.0)),
            Err(LinkageError::AlreadyPinned(_))
        ));
    }

    #[test]
    fn transform_identity_is_noop() {
        let l = triangle().pin(&"A".into(), Complex64::new(1.0, 1.0)).unwrap();
        assert_eq!(l.transform(&EuclideanMotion::identity()).unwrap(), l);
    }

    #[test]
    fn rescale_scales_lengths_and_pins() {
        let l = triangle().pin(&"A".into(), Complex64::new(1.0, 0.0)).unwrap();
        let s = l.rescale(3.0).unwrap();
        assert!(s.edges().iter().all(|e| (e.len - 3.0).abs() < 1e-12));
        assert_eq!(s.pin_of(&"A".into()).unwrap(), Complex64::new(3.0, 0.0));
        assert!(l.rescale(0.0).is_err());
        assert!(l.rescale(-1.0).is_err());
    }

    #[test]
    fn anchor_frame_on_empty_linkage() {
        let (framed, report) = Linkage::new().add_anchor_frame();
        assert_eq!(framed.vertex_count(), 4);
        assert_eq!(framed.edges().len(), 6);
        assert!(report.skipped_coincident.is_empty());
        let mut lens: Vec<f64> = framed.edges().iter().map(|e| e.len).collect();
        lens.sort_unstable_by(f64::total_cmp);
        let two: f64 = 2.0;
        let expected = [1.0, 1.0, two.sqrt(), two.sqrt(), 5.0f64.sqrt(), 5.0f64.sqrt()];
        for (got, want) in lens.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "lengths {lens:?}");
        }
    }

    #[test]
    fn anchor_frame_is_idempotent() {
        let (once, _) = Linkage::new().add_anchor_frame();
        let (twice, _) = once.add_anchor_frame();
        assert_eq!(once, twice);
    }

    #[test]
    fn anchor_frame_skips_coincident_pins() {
        let mut l = Linkage::new();
        l.add_vertex("P");
        l.add_vertex("Q");
        let l = l.pin(&"P".into(), Complex64::new(5.0, 5.0)).unwrap();
        let l = l.pin(&"Q".into(), Complex64::new(5.0, 5.0)).unwrap();
        let (framed, report) = l.add_anchor_frame();
        assert_eq!(report.skipped_coincident.len(), 1);
        assert!(framed.validate().is_ok());
    }

    #[test]
    fn relax_anchors_keeps_prefix() {
        let (framed, report) = Linkage::new().add_anchor_frame();
        let relaxed = framed.relax_anchors(2).unwrap();
        assert_eq!(relaxed.pins().len(), 2);
        assert!(relaxed.pins().contains_key(&report.anchors[0]));
        assert!(relaxed.pins().contains_key(&report.anchors[1]));
        assert_eq!(relaxed.edges().len(), framed.edges().len());
        assert!(framed.relax_anchors(4).is_err());
        assert!(Linkage::new().relax_anchors(2).is_err());
    }

    #[test]
    fn components_and_connectivity() {
        let t = triangle();
        assert!(t.is_connected());
        let mut l2 = Linkage::new();
        l2.add_edge("X", "Y", 1.0).unwrap();
        let u = t.disjoint_union(&l2);
        assert_eq!(u.components().len(), 2);
    }

    #[test]
    fn reflection_across_line_fixes_it() {
        let a = Complex64::new(1.0, 1.0);
        let b = Complex64::new(3.0, 2.0);
        let g = EuclideanMotion::reflection_across(a, b);
        assert!((g.apply(a) - a).norm() < 1e-12);
        assert!((g.apply(b) - b).norm() < 1e-12);
        let p = Complex64::new(0.0, 4.0);
        // Applying the reflection twice is the identity.
        assert!((g.apply(g.apply(p)) - p).norm() < 1e-12);
        assert!((g.apply(p) - p).norm() > 1.0);
    }
}
