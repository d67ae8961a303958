use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Ghd, NodeId, NodeSpec};
use crate::query::AtomId;
use crate::relation::Attr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct DraftNode {
    pub chi: BTreeSet<Attr>,
    pub lambda: BTreeSet<AtomId>,
    pub parent: Option<NodeId>,
    pub children: BTreeSet<NodeId>,
}

/// Mutable rooted tree used while rewriting a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Draft {
    pub nodes: BTreeMap<NodeId, DraftNode>,
    pub root: NodeId,
}

impl Draft {
    pub fn from_ghd(d: &Ghd) -> Draft {
        let nodes = d
            .nodes()
            .map(|n| {
                (
                    n.id,
                    DraftNode {
                        chi: n.chi.clone(),
                        lambda: n.lambda.clone(),
                        parent: n.parent,
                        children: n.children.iter().copied().collect(),
                    },
                )
            })
            .collect();
        Draft {
            nodes,
            root: d.root(),
        }
    }

    pub fn to_ghd(&self) -> Ghd {
        let specs = self
            .nodes
            .iter()
            .map(|(&id, n)| NodeSpec {
                id,
                chi: n.chi.clone(),
                lambda: n.lambda.clone(),
                children: n.children.iter().copied().collect(),
            })
            .collect();
        Ghd::new(self.root, specs).expect("draft edits keep a rooted tree")
    }

    pub fn node(&self, id: NodeId) -> &DraftNode {
        &self.nodes[&id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut DraftNode {
        self.nodes.get_mut(&id).expect("known node")
    }

    pub fn fresh_id(&self) -> NodeId {
        self.nodes
            .keys()
            .next_back()
            .map_or(NodeId(0), |id| NodeId(id.0 + 1))
    }

    pub fn degree(&self, id: NodeId) -> usize {
        let n = &self.nodes[&id];
        n.children.len() + usize::from(n.parent.is_some())
    }

    pub fn add_node(
        &mut self,
        parent: Option<NodeId>,
        chi: BTreeSet<Attr>,
        lambda: BTreeSet<AtomId>,
    ) -> NodeId {
        let id = self.fresh_id();
        self.nodes.insert(
            id,
            DraftNode {
                chi,
                lambda,
                parent,
                children: BTreeSet::new(),
            },
        );
        if let Some(p) = parent {
            self.node_mut(p).children.insert(id);
        }
        id
    }

    /// Moves `child` (with its subtree) under `new_parent`.
    pub fn reparent(&mut self, child: NodeId, new_parent: NodeId) {
        if let Some(old) = self.nodes[&child].parent {
            self.node_mut(old).children.remove(&child);
        }
        self.node_mut(child).parent = Some(new_parent);
        self.node_mut(new_parent).children.insert(child);
    }

    /// Removes a childless node.
    pub fn remove_leaf(&mut self, id: NodeId) {
        let node = self.nodes.remove(&id).expect("known node");
        debug_assert!(node.children.is_empty());
        if let Some(p) = node.parent {
            self.node_mut(p).children.remove(&id);
        }
    }

    /// Deletes a node of degree at most two, reconnecting its neighbours.
    /// A root with two children is replaced by its lower-id child, which
    /// adopts the other one.
    pub fn delete_and_reconnect(&mut self, id: NodeId) {
        debug_assert!(self.degree(id) <= 2 && self.nodes.len() > 1);
        let children: Vec<NodeId> = self.nodes[&id].children.iter().copied().collect();
        match (self.nodes[&id].parent, children.as_slice()) {
            (_, []) => self.remove_leaf(id),
            (Some(p), [c]) => {
                self.reparent(*c, p);
                self.remove_leaf(id);
            }
            (None, [c]) => {
                self.node_mut(*c).parent = None;
                self.nodes.remove(&id);
                self.root = *c;
            }
            (None, [a, b]) => {
                self.reparent(*b, *a);
                self.node_mut(*a).parent = None;
                self.nodes.remove(&id);
                self.root = *a;
            }
            _ => unreachable!("degree checked above"),
        }
    }

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
}
