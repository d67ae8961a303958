use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Ghd, GhdError, NodeId, NodeSpec};
use crate::query::{AtomId, Query};

/// On-disk form of a decomposition. Attribute names are sorted, as are atom
/// ids and child ids; nodes are listed by ascending id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhdDocument {
    pub root: usize,
    pub nodes: Vec<NodeDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    pub chi: Vec<String>,
    pub lambda: Vec<usize>,
    pub children: Vec<usize>,
}

impl GhdDocument {
    pub fn from_ghd(q: &Query, d: &Ghd) -> GhdDocument {
        let nodes = d
            .nodes()
            .map(|n| {
                let mut chi: Vec<String> =
                    n.chi.iter().map(|&a| q.attr_name(a).to_string()).collect();
                chi.sort();
                NodeDocument {
                    id: n.id.0,
                    chi,
                    lambda: n.lambda.iter().map(|a| a.0).collect(),
                    children: n.children.iter().map(|c| c.0).collect(),
                }
            })
            .collect();
        GhdDocument {
            root: d.root().0,
            nodes,
        }
    }

    pub fn to_ghd(&self, q: &Query) -> Result<Ghd, GhdError> {
        let specs = self
            .nodes
            .iter()
            .map(|n| {
                let chi = n
                    .chi
                    .iter()
                    .map(|name| {
                        q.attr_by_name(name)
                            .ok_or_else(|| GhdError::UnknownAttribute(name.clone()))
                    })
                    .collect::<Result<BTreeSet<_>, _>>()?;
                Ok(NodeSpec {
                    id: NodeId(n.id),
                    chi,
                    lambda: n.lambda.iter().map(|&a| AtomId(a)).collect(),
                    children: n.children.iter().map(|&c| NodeId(c)).collect(),
                })
            })
            .collect::<Result<Vec<_>, GhdError>>()?;
        Ghd::new(NodeId(self.root), specs)
    }
}

impl Ghd {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self, q: &Query) -> String {
        let mut s = serde_json::to_string_pretty(&GhdDocument::from_ghd(q, self))
            .expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(q: &Query, text: &str) -> Result<Ghd, GhdError> {
        let doc: GhdDocument =
            serde_json::from_str(text).map_err(|e| GhdError::Json(e.to_string()))?;
        doc.to_ghd(q)
    }
}
