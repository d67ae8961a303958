//! Generalized hypertree decompositions.
//!
//! A [`Ghd`] is a rooted tree whose nodes carry an attribute set `chi` and a
//! set of atoms `lambda`. Construction only checks that the node graph is a
//! rooted tree; whether it decomposes a particular query is answered by
//! [`validate_ghd`].

mod complete;
mod draft;
pub mod fixtures;
mod json;
mod stats;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query::{AtomId, Query};
use crate::relation::Attr;

pub use complete::complete_and_minimize;
pub(crate) use draft::Draft;
pub use fixtures::{fixture_ghd, GhdFamily};
pub use json::{GhdDocument, NodeDocument};
pub use stats::{min_cover, stats, GhdStats};
pub use validate::{validate_ghd, ValidationReport, Violation};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GhdError {
    #[error("decomposition has no nodes")]
    Empty,
    #[error("node {0} is defined twice")]
    DuplicateNode(NodeId),
    #[error("node {0} is referenced but not defined")]
    UnknownNode(NodeId),
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("root {0} is listed as a child")]
    RootHasParent(NodeId),
    #[error("node {0} is not reachable from the root")]
    Unreachable(NodeId),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("decomposition is not a valid GHD of the query: {0}")]
    Invalid(String),
    #[error("malformed decomposition document: {0}")]
    Json(String),
    #[error("invalid fixture parameters: {0}")]
    Fixture(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhdNode {
    pub id: NodeId,
    pub chi: BTreeSet<Attr>,
    pub lambda: BTreeSet<AtomId>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Node description used to build a [`Ghd`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub chi: BTreeSet<Attr>,
    pub lambda: BTreeSet<AtomId>,
    pub children: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ghd {
    nodes: BTreeMap<NodeId, GhdNode>,
    root: NodeId,
}

impl Ghd {
    /// Builds a rooted tree. Children lists are stored sorted.
    pub fn new(root: NodeId, specs: Vec<NodeSpec>) -> Result<Self, GhdError> {
        if specs.is_empty() {
            return Err(GhdError::Empty);
        }
        let mut nodes: BTreeMap<NodeId, GhdNode> = BTreeMap::new();
        for spec in specs {
            let mut children = spec.children;
            children.sort();
            let node = GhdNode {
                id: spec.id,
                chi: spec.chi,
                lambda: spec.lambda,
                children,
                parent: None,
            };
            if nodes.insert(spec.id, node).is_some() {
                return Err(GhdError::DuplicateNode(spec.id));
            }
        }
        if !nodes.contains_key(&root) {
            return Err(GhdError::UnknownNode(root));
        }
        let edges: Vec<(NodeId, NodeId)> = nodes
            .values()
            .flat_map(|n| n.children.iter().map(move |&c| (n.id, c)))
            .collect();
        for (p, c) in edges {
            if c == root {
                return Err(GhdError::RootHasParent(root));
            }
            let child = nodes.get_mut(&c).ok_or(GhdError::UnknownNode(c))?;
            if child.parent.is_some() {
                return Err(GhdError::MultipleParents(c));
            }
            child.parent = Some(p);
        }
        let ghd = Ghd { nodes, root };
        let reached: BTreeSet<NodeId> = ghd.pre_order().into_iter().collect();
        if let Some(id) = ghd.nodes.keys().find(|id| !reached.contains(id)) {
            return Err(GhdError::Unreachable(*id));
        }
        Ok(ghd)
    }

    /// A single node holding every atom of `q`.
    pub fn single_node(q: &Query) -> Ghd {
        let spec = NodeSpec {
            id: NodeId(0),
            chi: q.attrs().collect(),
            lambda: q.atoms().iter().map(|a| a.id).collect(),
            children: vec![],
        };
        Ghd::new(NodeId(0), vec![spec]).expect("single node is a tree")
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Option<&GhdNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GhdNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[&id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[&id].parent
    }

    pub fn chi(&self, id: NodeId) -> &BTreeSet<Attr> {
        &self.nodes[&id].chi
    }

    pub fn lambda(&self, id: NodeId) -> &BTreeSet<AtomId> {
        &self.nodes[&id].lambda
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[&id].children.is_empty()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        let n = &self.nodes[&id];
        n.children.len() + usize::from(n.parent.is_some())
    }

    /// Tree edges as `(parent, child)` pairs, ordered by child id.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .values()
            .filter_map(|n| n.parent.map(|p| (p, n.id)))
            .collect()
    }

    /// Root first, children in ascending id order.
    pub fn pre_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some(n) = self.nodes.get(&id) {
                stack.extend(n.children.iter().rev().copied());
            }
        }
        out
    }

    /// Children before parents; the root comes last.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in self.nodes[&id].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Depth of every node; the root has depth 0.
    pub fn depths(&self) -> BTreeMap<NodeId, usize> {
        let mut depths = BTreeMap::new();
        let mut queue = VecDeque::from([(self.root, 0usize)]);
        while let Some((id, d)) = queue.pop_front() {
            depths.insert(id, d);
            for &c in &self.nodes[&id].children {
                queue.push_back((c, d + 1));
            }
        }
        depths
    }

    pub fn depth(&self) -> usize {
        self.depths().values().copied().max().unwrap_or(0)
    }

    /// Height of every node: 0 for leaves, otherwise one more than the
    /// tallest child.
    pub fn heights(&self) -> BTreeMap<NodeId, usize> {
        let mut heights = BTreeMap::new();
        for id in self.post_order() {
            let h = self.nodes[&id]
                .children
                .iter()
                .map(|c| heights[c] + 1)
                .max()
                .unwrap_or(0);
            heights.insert(id, h);
        }
        heights
    }

    pub fn width(&self) -> usize {
        self.nodes.values().map(|n| n.lambda.len()).max().unwrap_or(0)
    }

    /// Every atom occurs in some node's `lambda`.
    pub fn is_complete(&self, q: &Query) -> bool {
        let covered: BTreeSet<AtomId> = self
            .nodes
            .values()
            .flat_map(|n| n.lambda.iter().copied())
            .collect();
        q.atoms().iter().all(|a| covered.contains(&a.id))
    }

    pub fn max_node_id(&self) -> NodeId {
        *self.nodes.keys().next_back().expect("nonempty")
    }

    /// The same decomposition rooted at `v`.
    pub fn root_at(&self, v: NodeId) -> Result<Ghd, GhdError> {
        if !self.contains(v) {
            return Err(GhdError::UnknownNode(v));
        }
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (p, c) in self.edges() {
            adj.entry(p).or_default().push(c);
            adj.entry(c).or_default().push(p);
        }
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([v]);
        while let Some(id) = queue.pop_front() {
            for &n in adj.get(&id).into_iter().flatten() {
                if seen.insert(n) {
                    children.entry(id).or_default().push(n);
                    queue.push_back(n);
                }
            }
        }
        let specs = self
            .nodes
            .values()
            .map(|n| NodeSpec {
                id: n.id,
                chi: n.chi.clone(),
                lambda: n.lambda.clone(),
                children: children.remove(&n.id).unwrap_or_default(),
            })
            .collect();
        Ghd::new(v, specs)
    }

    /// Node descriptions, ready to be edited and passed to [`Ghd::new`].
    pub fn specs(&self) -> Vec<NodeSpec> {
        self.nodes
            .values()
            .map(|n| NodeSpec {
                id: n.id,
                chi: n.chi.clone(),
                lambda: n.lambda.clone(),
                children: n.children.clone(),
            })
            .collect()
    }
}

/// Free-function form of [`Ghd::root_at`].
pub fn root_at(d: &Ghd, v: NodeId) -> Result<Ghd, GhdError> {
    d.root_at(v)
}

/// Union of the attribute sets of the given atoms.
pub fn atoms_cover(q: &Query, atoms: &BTreeSet<AtomId>) -> BTreeSet<Attr> {
    atoms
        .iter()
        .filter_map(|&a| q.atom(a))
        .flat_map(|a| a.attrs.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: usize, children: &[usize]) -> NodeSpec {
        NodeSpec {
            id: NodeId(id),
            chi: BTreeSet::new(),
            lambda: BTreeSet::new(),
            children: children.iter().map(|&c| NodeId(c)).collect(),
        }
    }

    fn path3() -> Ghd {
        Ghd::new(NodeId(0), vec![spec(0, &[1]), spec(1, &[2]), spec(2, &[])]).unwrap()
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Ghd::new(NodeId(0), vec![]), Err(GhdError::Empty));
        assert_eq!(
            Ghd::new(NodeId(0), vec![spec(0, &[1])]),
            Err(GhdError::UnknownNode(NodeId(1)))
        );
        assert_eq!(
            Ghd::new(NodeId(0), vec![spec(0, &[1, 2]), spec(1, &[2]), spec(2, &[])]),
            Err(GhdError::MultipleParents(NodeId(2)))
        );
        assert_eq!(
            Ghd::new(NodeId(0), vec![spec(0, &[1]), spec(1, &[0])]),
            Err(GhdError::RootHasParent(NodeId(0)))
        );
        assert_eq!(
            Ghd::new(NodeId(0), vec![spec(0, &[]), spec(1, &[2]), spec(2, &[1])]),
            Err(GhdError::Unreachable(NodeId(1)))
        );
        assert_eq!(
            Ghd::new(NodeId(0), vec![spec(0, &[]), spec(0, &[])]),
            Err(GhdError::DuplicateNode(NodeId(0)))
        );
    }

    #[test]
    fn orders_and_depths() {
        let g = path3();
        assert_eq!(g.pre_order(), [NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(g.post_order(), [NodeId(2), NodeId(1), NodeId(0)]);
        assert_eq!(g.depth(), 2);
        assert_eq!(g.heights()[&NodeId(0)], 2);
    }

    #[test]
    fn root_at_same_root_is_identity() {
        let g = path3();
        assert_eq!(g.root_at(NodeId(0)).unwrap(), g);
    }

    #[test]
    fn root_at_middle_of_path() {
        let g = path3().root_at(NodeId(1)).unwrap();
        assert_eq!(g.depth(), 1);
        assert_eq!(g.children(NodeId(1)), [NodeId(0), NodeId(2)]);
        assert_eq!(path3().root_at(NodeId(9)), Err(GhdError::UnknownNode(NodeId(9))));
    }
}
