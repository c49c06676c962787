//! Planar linkage toolkit.
//!
//! A planar linkage is a graph with a positive length per edge plus an
//! optional pinning of some vertices to fixed plane points. A realization
//! places every vertex in the plane so that each edge is exactly as long as
//! its label says. This crate provides:
//!
//! - the linkage data model and the graph surgeries on it (union, splice,
//!   pinning, anchor frames) — [`linkage`];
//! - parameterized mechanism gadgets (pantograph, Peaucellier inversor,
//!   squarer, straight-line tracer, conjugator), each packaged with an exact
//!   forward-placement rule and a certified input domain — [`gadgets`];
//! - a compiler that lowers polynomial expressions over complex variables
//!   (with conjugation) into linkages that compute them — [`compiler`];
//! - a generic damped Gauss-Newton solver, random-restart configuration
//!   sampling and curve tracing by continuation — [`solver`];
//! - property checks: quasifunctionality verification, semiconfiguration
//!   sampling, isometry-invariance and compactness reports — [`analysis`].
//!
//! The `linkforge` binary ties these together behind `compile`, `solve`,
//! `verify`, `trace`, `render` and `analyze` subcommands.

pub mod analysis;
pub mod compiler;
pub mod expr;
pub mod gadgets;
pub mod geom;
pub mod jsonio;
pub mod linkage;
pub mod render;
pub mod solver;

pub use linkage::{Edge, EdgeKind, EuclideanMotion, Linkage, MarkerSet, Realization, VertexId};

/// Absolute tolerance for constraints of exactly-constructed realizations.
///
/// Forward placement accumulates a few ulps of double-precision error at the
/// length scales in play; 1e-9 leaves five orders of headroom.
pub const TOL_EXACT: f64 = 1e-9;

/// Absolute tolerance for constraints of numerically solved realizations.
pub const TOL_SOLVE: f64 = 1e-6;
