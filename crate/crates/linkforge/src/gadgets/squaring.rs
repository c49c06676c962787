//! Squaring gadget, z -> z^2 on the disk |z| <= r.
//!
//! Built by composition around the inversion identity
//!
//! ```text
//! t^2 - t * h((h(t+z) + h(t-z)) / 2) = z^2,   h(w) = t^2 w / |w|^2
//! ```
//!
//! with t = 4r and inversor cable bound 3r, which gives the inversors the
//! annulus 2r <= |w| <= 8r. For |z| <= r the inversor inputs satisfy
//! 3r <= |t+-z| <= 5r and the averaged reflection stays within
//! [64r/17, 64r/15], so every intermediate keeps a positive margin to its
//! domain boundary.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{join, DomainDescriptor, Instance, InstanceKind, QfLinkage};
use crate::linkage::{Linkage, VertexId};

/// Ratio bound for the third inversor input: |h(t+z)+h(t-z)|/2 <= 16r/3.
fn averaged_bound(r: f64) -> f64 {
    16.0 * r / 3.0
}

/// Bound on the final inversion output (t^2 - z^2)/t: 17r/4 at |z| <= r.
fn w3_bound(r: f64) -> f64 {
    17.0 * r / 4.0
}

/// The final scaling w -> t*w. Its true input is z^2/t, bounded by r/4, so
/// the stage stays small even though t itself may be large.
fn scale_by_t(r: f64, stage_prefix: String, vin: &VertexId, vout: &VertexId, pin: VertexId) -> Instance {
    let t = 4.0 * r;
    let input_bound = r / 4.0;
    if (t - 1.0).abs() < 1e-12 {
        Instance {
            kind: InstanceKind::Identity,
            prefix: stage_prefix,
            io: vec![vin.clone(), vout.clone()],
        }
    } else if t > 1.0 {
        Instance {
            kind: InstanceKind::PantographScaleUp { a: input_bound, c: t - 1.0 },
            prefix: stage_prefix,
            io: vec![pin, vin.clone(), vout.clone()],
        }
    } else {
        Instance {
            kind: InstanceKind::PantographScaleDown { a: input_bound * t, c: 1.0 / t - 1.0 },
            prefix: stage_prefix,
            io: vec![pin, vout.clone(), vin.clone()],
        }
    }
}

/// The gadget pipeline as wired instances. Pure in its arguments; placement
/// and construction both derive from it, so a gadget reloaded from disk
/// places exactly like a freshly built one.
///
/// The affine tail computes t - h(m) = z^2/t first and scales by t last.
/// Subtracting before scaling exploits the cancellation in t - h(m), which
/// keeps every coordinate O(r) instead of O(r^2) and the whole construction
/// well conditioned.
pub(super) fn plan(prefix: &str, r: f64, vin: &VertexId, vout: &VertexId) -> Vec<Instance> {
    let j = |name: &str| join(prefix, name);
    let t = 4.0 * r;
    let inv = InstanceKind::Peaucellier { a: (2.0f64).sqrt() * t, b: t, c: 3.0 * r };
    let sub = |name: &str| {
        if prefix.is_empty() {
            name.to_owned()
        } else {
            format!("{prefix}/{name}")
        }
    };
    vec![
        // 2z and -2z
        Instance {
            kind: InstanceKind::PantographScaleUp { a: r, c: 1.0 },
            prefix: sub("s1"),
            io: vec![j("s1/A"), vin.clone(), j("s1")],
        },
        Instance {
            kind: InstanceKind::PantographNegate { a: r, c: 2.0 },
            prefix: sub("n1"),
            io: vec![vin.clone(), j("n1/B"), j("n1")],
        },
        // t+z and t-z via the pinned constant 2t
        Instance {
            kind: InstanceKind::PantographAverage { a: 5.0 * r },
            prefix: sub("u"),
            io: vec![j("s1"), j("u"), j("c2t")],
        },
        Instance {
            kind: InstanceKind::PantographAverage { a: 5.0 * r },
            prefix: sub("v"),
            io: vec![j("n1"), j("v"), j("c2t")],
        },
        // h(t+z), h(t-z), their average, and the final inversion
        Instance { kind: inv.clone(), prefix: sub("w1"), io: vec![j("u"), j("w1")] },
        Instance { kind: inv.clone(), prefix: sub("w2"), io: vec![j("v"), j("w2")] },
        Instance {
            kind: InstanceKind::PantographAverage { a: averaged_bound(r) },
            prefix: sub("m"),
            io: vec![j("w1"), j("m"), j("w2")],
        },
        Instance { kind: inv, prefix: sub("w3"), io: vec![j("m"), j("w3")] },
        // w5 = (2t - 2*h(m))/2 = z^2/t, then scale by t
        Instance {
            kind: InstanceKind::PantographNegate { a: w3_bound(r), c: 2.0 },
            prefix: sub("n3"),
            io: vec![j("w3"), j("n3/B"), j("n3")],
        },
        Instance {
            kind: InstanceKind::PantographAverage { a: w3_bound(r) + t },
            prefix: sub("w5"),
            io: vec![j("n3"), j("w5"), j("c2t")],
        },
        scale_by_t(r, sub("out"), &j("w5"), vout, j("out/A")),
    ]
}

pub(super) fn append_consts(l: &mut Linkage, prefix: &str, r: f64) {
    let t = 4.0 * r;
    l.set_pin(join(prefix, "c2t"), Complex64::new(2.0 * t, 0.0));
}

pub(super) fn place_consts(pos: &mut BTreeMap<VertexId, Complex64>, prefix: &str, r: f64) {
    let t = 4.0 * r;
    pos.insert(join(prefix, "c2t"), Complex64::new(2.0 * t, 0.0));
}

/// Names of the inversor inputs together with their annulus, for margin
/// checks on sampled placements.
pub fn inversion_stage_margins(r: f64, prefix: &str) -> (Vec<VertexId>, f64, f64) {
    let names = ["u", "v", "m"].iter().map(|n| join(prefix, n)).collect();
    (names, 2.0 * r, 8.0 * r)
}

/// Build the squaring gadget with certified domain |z| <= r.
pub fn squaring(r: f64) -> Result<QfLinkage, super::PlaceError> {
    if !(r > 0.0) {
        return Err(super::PlaceError::Construction(format!(
            "squaring radius must be positive, got {r}"
        )));
    }
    let vin = VertexId::new("z");
    let vout = VertexId::new("out");
    let top = Instance {
        kind: InstanceKind::Squaring { r },
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
