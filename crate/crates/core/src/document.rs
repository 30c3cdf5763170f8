//! JSON documents for networks and collateral matrices.
//!
//! Every number is an exact rational written as a `"p/q"` or integer string.
//! Bare JSON integers are accepted on input; floats are rejected.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::DocumentError;
use crate::model::{CollateralMatrix, Edge, InvestmentNetwork, Vertex, VertexId};
use crate::rational::{Money, Rate, Rational};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    #[serde(default = "Rational::zero")]
    pub z: Money,
    #[serde(default = "Rational::zero")]
    pub alpha: Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub enterprise: String,
    pub investor: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub version: u32,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
}

impl NetworkDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        if doc.version != DOCUMENT_VERSION {
            return Err(DocumentError::Version(doc.version));
        }
        Ok(doc)
    }

    pub fn from_network(net: &InvestmentNetwork) -> Self {
        NetworkDocument {
            version: DOCUMENT_VERSION,
            vertices: net
                .vertices()
                .iter()
                .map(|v| VertexRecord {
                    id: v.id.clone(),
                    z: v.cost.clone(),
                    alpha: v.rate.clone(),
                })
                .collect(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    enterprise: net.vertex(e.enterprise).id.clone(),
                    investor: net.vertex(e.investor).id.clone(),
                    amount: e.amount.clone(),
                })
                .collect(),
            meta: Map::new(),
        }
    }

    pub fn with_meta(mut self, meta: Map<String, Value>) -> Self {
        self.meta = meta;
        self
    }

    /// Resolves vertex ids and rejects duplicate vertices or edges.
    /// Weights, costs and rates are checked later by validation.
    pub fn to_network(&self) -> Result<InvestmentNetwork, DocumentError> {
        if self.version != DOCUMENT_VERSION {
            return Err(DocumentError::Version(self.version));
        }
        let mut index: HashMap<&str, VertexId> = HashMap::new();
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (j, v) in self.vertices.iter().enumerate() {
            if index.insert(v.id.as_str(), j).is_some() {
                return Err(DocumentError::DuplicateVertex(v.id.clone()));
            }
            vertices.push(Vertex {
                id: v.id.clone(),
                cost: v.z.clone(),
                rate: v.alpha.clone(),
            });
        }
        let lookup = |index_in_doc: usize, id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| DocumentError::UnknownVertex {
                    index: index_in_doc,
                    id: id.to_string(),
                })
        };
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (j, e) in self.edges.iter().enumerate() {
            let k = lookup(j, &e.enterprise)?;
            let i = lookup(j, &e.investor)?;
            if !seen.insert((k, i)) {
                return Err(DocumentError::DuplicateEdge {
                    index: j,
                    enterprise: e.enterprise.clone(),
                    investor: e.investor.clone(),
                });
            }
            edges.push(Edge {
                enterprise: k,
                investor: i,
                amount: e.amount.clone(),
            });
        }
        Ok(InvestmentNetwork::new(vertices, edges)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollateralRecord {
    pub enterprise: String,
    pub investor: String,
    pub amount: Money,
}

/// Per-edge collaterals; edges that are not listed get zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollateralDocument {
    pub version: u32,
    pub collaterals: Vec<CollateralRecord>,
}

impl CollateralDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: CollateralDocument = serde_json::from_str(text)?;
        if doc.version != DOCUMENT_VERSION {
            return Err(DocumentError::Version(doc.version));
        }
        Ok(doc)
    }

    pub fn from_matrix(net: &InvestmentNetwork, c: &CollateralMatrix) -> Self {
        CollateralDocument {
            version: DOCUMENT_VERSION,
            collaterals: net
                .edges()
                .iter()
                .enumerate()
                .map(|(e, edge)| CollateralRecord {
                    enterprise: net.vertex(edge.enterprise).id.clone(),
                    investor: net.vertex(edge.investor).id.clone(),
                    amount: c.get(e).clone(),
                })
                .collect(),
        }
    }

    pub fn to_matrix(&self, net: &InvestmentNetwork) -> Result<CollateralMatrix, DocumentError> {
        let mut values = vec![Rational::zero(); net.edge_count()];
        let mut seen = HashSet::new();
        for (j, r) in self.collaterals.iter().enumerate() {
            let unknown = || DocumentError::UnknownEdge {
                index: j,
                enterprise: r.enterprise.clone(),
                investor: r.investor.clone(),
            };
            let k = net.index_of(&r.enterprise).ok_or_else(unknown)?;
            let i = net.index_of(&r.investor).ok_or_else(unknown)?;
            let e = net.find_edge(k, i).ok_or_else(unknown)?;
            if !seen.insert(e) {
                return Err(DocumentError::DuplicateEdge {
                    index: j,
                    enterprise: r.enterprise.clone(),
                    investor: r.investor.clone(),
                });
            }
            values[e] = r.amount.clone();
        }
        Ok(CollateralMatrix::new(net, values)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }
}
