//! Canonical JSON documents for linkages, gadgets and realizations.
//!
//! The linkage format is emitted sorted by vertex name:
//!
//! ```json
//! {"vertices":["A","B"],
//!  "edges":[{"u":"A","v":"B","len":1.0}],
//!  "pinned":{"A":[0.0,0.0]},
//!  "markers":["B"],
//!  "io":{"inputs":["A"],"outputs":["B"]}}
//! ```
//!
//! `markers` and `io` are optional; quasifunctional gadgets carry an extra
//! `gadget` annotation (kind plus parameters, or the full instance plan for
//! compiled expressions) from which forward placement is reconstructed on
//! load, so a round-tripped gadget verifies bit-identically.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::Compiled;
use crate::gadgets::{
    conjugation, identity_gadget, pantograph, peaucellier, squaring, DomainDescriptor, Instance,
    PantographMode, QfLinkage,
};
use crate::linkage::{EdgeKind, Linkage, MarkerSet, Realization, VertexId};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct EdgeDoc {
    u: String,
    v: String,
    len: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct IoDoc {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// The `gadget` annotation: which construction produced this linkage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GadgetDoc {
    Identity,
    Pantograph { mode: PantographMode, a: f64, c: f64 },
    Peaucellier { a: f64, b: f64, c: f64 },
    Squaring { r: f64 },
    Conjugation { r: f64 },
    Compiled { radius: f64, vars: usize, instances: Vec<Instance> },
}

/// A linkage file: the linkage itself plus optional markers, input/output
/// designation and gadget annotation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LinkageDoc {
    pub vertices: Vec<String>,
    edges: Vec<EdgeDoc>,
    pinned: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub io: Option<IoDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gadget: Option<GadgetDoc>,
}

fn kind_name(kind: EdgeKind) -> Option<String> {
    match kind {
        EdgeKind::Bar => None,
        EdgeKind::Brace => Some("brace".to_owned()),
        EdgeKind::Cable => Some("cable".to_owned()),
    }
}

fn kind_of(name: Option<&str>) -> Result<EdgeKind, DocError> {
    match name {
        None | Some("bar") => Ok(EdgeKind::Bar),
        Some("brace") => Ok(EdgeKind::Brace),
        Some("cable") => Ok(EdgeKind::Cable),
        Some(other) => Err(DocError::Invalid(format!("unknown edge kind `{other}`"))),
    }
}

impl LinkageDoc {
    pub fn new(l: &Linkage) -> LinkageDoc {
        let mut edges: Vec<EdgeDoc> = l
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                u: e.u.as_str().to_owned(),
                v: e.v.as_str().to_owned(),
                len: e.len,
                kind: kind_name(e.kind),
            })
            .collect();
        edges.sort_by(|a, b| (&a.u, &a.v, a.len).partial_cmp(&(&b.u, &b.v, b.len)).unwrap());
        LinkageDoc {
            vertices: l.vertices().map(|v| v.as_str().to_owned()).collect(),
            edges,
            pinned: l.pins().iter().map(|(v, z)| (v.as_str().to_owned(), [z.re, z.im])).collect(),
            markers: Vec::new(),
            io: None,
            gadget: None,
        }
    }

    pub fn with_markers(mut self, w: &MarkerSet) -> LinkageDoc {
        self.markers = w.iter().map(|v| v.as_str().to_owned()).collect();
        self
    }

    pub fn for_gadget(qf: &QfLinkage, gadget: GadgetDoc) -> LinkageDoc {
        let mut doc = LinkageDoc::new(&qf.linkage);
        doc.io = Some(IoDoc {
            inputs: qf.inputs.iter().map(|v| v.as_str().to_owned()).collect(),
            outputs: qf.outputs.iter().map(|v| v.as_str().to_owned()).collect(),
        });
        doc.gadget = Some(gadget);
        doc
    }

    pub fn for_compiled(c: &Compiled) -> LinkageDoc {
        LinkageDoc::for_gadget(
            &c.qf,
            GadgetDoc::Compiled {
                radius: c.radius,
                vars: c.n_vars,
                instances: c.qf.plan.clone(),
            },
        )
    }

    pub fn linkage(&self) -> Result<Linkage, DocError> {
        let mut l = Linkage::new();
        for v in &self.vertices {
            l.add_vertex(v.as_str());
        }
        for e in &self.edges {
            l.add_edge_kind(e.u.as_str(), e.v.as_str(), e.len, kind_of(e.kind.as_deref())?)
                .map_err(|err| DocError::Invalid(err.to_string()))?;
        }
        for (v, [re, im]) in &self.pinned {
            if !l.has_vertex(&VertexId::new(v.as_str())) {
                return Err(DocError::Invalid(format!("pinned vertex `{v}` not in vertex list")));
            }
            l.set_pin(v.as_str(), Complex64::new(*re, *im));
        }
        Ok(l)
    }

    pub fn marker_set(&self) -> MarkerSet {
        MarkerSet::new(self.markers.iter().map(|s| VertexId::new(s.as_str())))
    }

    /// Rebuild the quasifunctional gadget this document describes, with its
    /// forward placement reconstructed from the gadget annotation.
    pub fn gadget(&self) -> Result<Option<QfLinkage>, DocError> {
        let Some(tag) = &self.gadget else { return Ok(None) };
        let built = match tag {
            GadgetDoc::Identity => identity_gadget(),
            GadgetDoc::Pantograph { mode, a, c } => pantograph(*mode, *a, *c)
                .map_err(|e| DocError::Invalid(e.to_string()))?,
            GadgetDoc::Peaucellier { a, b, c } => {
                peaucellier(*a, *b, *c).map_err(|e| DocError::Invalid(e.to_string()))?
            }
            GadgetDoc::Squaring { r } => {
                squaring(*r).map_err(|e| DocError::Invalid(e.to_string()))?
            }
            GadgetDoc::Conjugation { r } => {
                conjugation(*r).map_err(|e| DocError::Invalid(e.to_string()))?
            }
            GadgetDoc::Compiled { radius, vars, instances } => {
                let io = self
                    .io
                    .as_ref()
                    .ok_or_else(|| DocError::Invalid("compiled gadget without io".into()))?;
                QfLinkage {
                    linkage: self.linkage()?,
                    inputs: io.inputs.iter().map(|s| VertexId::new(s.as_str())).collect(),
                    outputs: io.outputs.iter().map(|s| VertexId::new(s.as_str())).collect(),
                    domain: DomainDescriptor::disk(*vars, *radius),
                    plan: instances.clone(),
                }
            }
        };
        Ok(Some(built))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("linkage document serializes")
    }

    pub fn from_json(text: &str) -> Result<LinkageDoc, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), DocError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<LinkageDoc, DocError> {
        LinkageDoc::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Realization document: vertex name to plane point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RealizationDoc {
    pub positions: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_edge_residual: Option<f64>,
}

impl RealizationDoc {
    pub fn new(r: &Realization) -> RealizationDoc {
        RealizationDoc {
            positions: r
                .positions()
                .iter()
                .map(|(v, z)| (v.as_str().to_owned(), [z.re, z.im]))
                .collect(),
            max_edge_residual: None,
        }
    }

    pub fn realization(&self) -> Realization {
        self.positions
            .iter()
            .map(|(v, [re, im])| (VertexId::new(v.as_str()), Complex64::new(*re, *im)))
            .collect()
    }
}
