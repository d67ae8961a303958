use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::shape::{select_in, SelectionRound};
use super::TransformError;
use crate::ghd::{atoms_cover, min_cover, validate_ghd, Draft, Ghd, NodeId};
use crate::query::{AtomId, Query};
use crate::relation::Attr;

/// One applied inactivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceEvent {
    Leaf {
        round: usize,
        node: NodeId,
        height: usize,
    },
    UniqueCGc {
        round: usize,
        node: NodeId,
        child: NodeId,
        grandchild: NodeId,
        new_node: NodeId,
        heights: BTreeMap<NodeId, usize>,
    },
}

/// A decomposition being rewritten by Log-GTA: every node is active or
/// inactive, inactive nodes carry the height they had when inactivated, and
/// every edge between two active nodes carries a common cover keyed by the
/// lower endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedGhd {
    base: Draft,
    active: BTreeSet<NodeId>,
    height: BTreeMap<NodeId, usize>,
    cc: BTreeMap<NodeId, BTreeSet<AtomId>>,
    iw: usize,
    w: usize,
}

impl ExtendedGhd {
    /// All nodes active, each edge labelled with a minimum cover of its
    /// shared attributes. Covers are searched up to the width of `d`.
    pub fn extend(q: &Query, d: &Ghd) -> Result<ExtendedGhd, TransformError> {
        let report = validate_ghd(q, d);
        if !report.is_valid() {
            return Err(TransformError::Invalid(report.to_string()));
        }
        let budget = d.width();
        let mut cc = BTreeMap::new();
        for (p, c) in d.edges() {
            let shared: BTreeSet<Attr> = d.chi(p).intersection(d.chi(c)).copied().collect();
            let cover = min_cover(q, &shared, budget).ok_or(TransformError::NoCover {
                parent: p,
                child: c,
                budget,
            })?;
            cc.insert(c, cover);
        }
        let iw = cc.values().map(BTreeSet::len).max().unwrap_or(0);
        Ok(ExtendedGhd {
            base: Draft::from_ghd(d),
            active: d.node_ids().collect(),
            height: BTreeMap::new(),
            cc,
            iw,
            w: d.width(),
        })
    }

    pub fn base(&self) -> Ghd {
        self.base.to_ghd()
    }

    pub fn iw(&self) -> usize {
        self.iw
    }

    pub fn is_active(&self, v: NodeId) -> bool {
        self.active.contains(&v)
    }

    pub fn active(&self) -> &BTreeSet<NodeId> {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn heights(&self) -> &BTreeMap<NodeId, usize> {
        &self.height
    }

    pub fn cover(&self, child: NodeId) -> Option<&BTreeSet<AtomId>> {
        self.cc.get(&child)
    }

    pub fn active_root(&self) -> Option<NodeId> {
        self.is_active(self.base.root).then_some(self.base.root)
    }

    pub fn active_children(&self, v: NodeId) -> Vec<NodeId> {
        self.base.nodes[&v]
            .children
            .iter()
            .copied()
            .filter(|c| self.active.contains(c))
            .collect()
    }

    fn inactive_height(&self, v: NodeId) -> usize {
        self.base.nodes[&v]
            .children
            .iter()
            .map(|c| self.height[c] + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn is_active_leaf(&self, l: NodeId) -> bool {
        self.is_active(l) && self.active_children(l).is_empty()
    }

    /// `(c, gc)` when `u` has exactly one active child, which itself has
    /// exactly one active child.
    pub fn unique_chain(&self, u: NodeId) -> Option<(NodeId, NodeId)> {
        if !self.is_active(u) {
            return None;
        }
        match self.active_children(u).as_slice() {
            [c] => match self.active_children(*c).as_slice() {
                [gc] => Some((*c, *gc)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn inactivate_leaf(&mut self, l: NodeId) -> Result<usize, TransformError> {
        if !self.is_active_leaf(l) {
            return Err(TransformError::NotActiveLeaf(l));
        }
        let h = self.inactive_height(l);
        self.active.remove(&l);
        self.height.insert(l, h);
        self.cc.remove(&l);
        Ok(h)
    }

    /// Replaces the chain `p → u → c → gc` by `p → s` with `s` adopting
    /// `u`, `c` and `gc`; `u` and `c` become inactive. Returns `s`.
    pub fn inactivate_unique_c_gc(&mut self, u: NodeId) -> Result<NodeId, TransformError> {
        let (c, gc) = self.unique_chain(u).ok_or(TransformError::NotUniqueCGc(u))?;
        let p = self.base.nodes[&u].parent;
        let chi = |v: NodeId| &self.base.nodes[&v].chi;
        let mut s_chi: BTreeSet<Attr> = chi(u).intersection(chi(c)).copied().collect();
        s_chi.extend(chi(c).intersection(chi(gc)).copied());
        let mut s_lambda: BTreeSet<AtomId> = self.cc[&c].union(&self.cc[&gc]).copied().collect();
        if let Some(p) = p {
            s_chi.extend(chi(p).intersection(chi(u)).copied());
            s_lambda.extend(self.cc[&u].iter().copied());
        }

        let s = self.base.add_node(p, s_chi, s_lambda);
        if p.is_none() {
            self.base.root = s;
        }
        for v in [u, c, gc] {
            self.base.reparent(v, s);
        }
        if let Some(p) = p {
            self.base.node_mut(p).children.remove(&u);
        }
        for v in [c, u] {
            let h = self.inactive_height(v);
            self.height.insert(v, h);
            self.active.remove(&v);
        }
        self.active.insert(s);
        if let Some(up) = self.cc.remove(&u) {
            self.cc.insert(s, up);
        }
        self.cc.remove(&c);
        Ok(s)
    }

    pub fn select_round(&self) -> SelectionRound {
        match self.active_root() {
            Some(root) => select_in(root, |v| self.active_children(v)),
            None => SelectionRound::default(),
        }
    }

    /// Checks the state invariants: active nodes form a subtree containing
    /// the root, inactive nodes have only inactive descendants, active edges
    /// carry small covers of their shared attributes, the base is a valid
    /// decomposition of bounded width, and recorded heights are true heights.
    pub fn check_invariants(&self, q: &Query) -> Result<(), String> {
        let base = self.base.to_ghd();
        let real_heights = base.heights();
        for v in base.node_ids() {
            let parent = base.parent(v);
            if self.is_active(v) {
                if let Some(p) = parent {
                    if !self.is_active(p) {
                        return Err(format!("active node {v} under inactive parent {p}"));
                    }
                    let cover = self
                        .cc
                        .get(&v)
                        .ok_or_else(|| format!("active edge {p}-{v} has no cover"))?;
                    if cover.len() > self.iw {
                        return Err(format!("cover on {p}-{v} exceeds iw {}", self.iw));
                    }
                    let shared: BTreeSet<Attr> =
                        base.chi(p).intersection(base.chi(v)).copied().collect();
                    if !shared.is_subset(&atoms_cover(q, cover)) {
                        return Err(format!("cover on {p}-{v} misses shared attributes"));
                    }
                }
            } else {
                if base.children(v).iter().any(|c| self.is_active(*c)) {
                    return Err(format!("inactive node {v} has an active child"));
                }
                let real = real_heights[&v];
                if self.height.get(&v) != Some(&real) {
                    return Err(format!(
                        "node {v} recorded height {:?}, actual {real}",
                        self.height.get(&v)
                    ));
                }
            }
        }
        if self.cc.keys().any(|v| !self.is_active(*v)) {
            return Err("cover kept on an inactive edge".into());
        }
        let report = validate_ghd(q, &base);
        if !report.is_valid() {
            return Err(report.to_string());
        }
        let bound = self.w.max(3 * self.iw);
        if base.width() > bound {
            return Err(format!("width {} exceeds {bound}", base.width()));
        }
        Ok(())
    }
}
