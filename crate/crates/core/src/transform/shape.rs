//! Bare rooted trees, their leaf/unique-c-gc counts and round selection.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use rand::Rng;
use serde::Serialize;

use crate::ghd::NodeId;

/// Rooted tree on nodes `0..n`, root 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeShape {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl TreeShape {
    /// `parent[0]` must be `None` and every other entry must point to a
    /// smaller index.
    pub fn from_parents(parent: Vec<Option<usize>>) -> TreeShape {
        assert!(!parent.is_empty() && parent[0].is_none());
        let mut children = vec![Vec::new(); parent.len()];
        for (v, p) in parent.iter().enumerate().skip(1) {
            let p = p.expect("only the root lacks a parent");
            assert!(p < v, "parents precede children");
            children[p].push(v);
        }
        TreeShape { parent, children }
    }

    pub fn path(n: usize) -> TreeShape {
        Self::from_parents((0..n).map(|v| v.checked_sub(1)).collect())
    }

    pub fn star(n: usize) -> TreeShape {
        Self::from_parents((0..n).map(|v| (v > 0).then_some(0)).collect())
    }

    /// Every node attaches to a uniformly chosen earlier node.
    pub fn random_recursive<R: Rng>(n: usize, rng: &mut R) -> TreeShape {
        Self::from_parents((0..n).map(|v| (v > 0).then(|| rng.gen_range(0..v))).collect())
    }

    /// Every node attaches to its predecessor with probability `stretch`,
    /// otherwise to a uniformly chosen earlier node. High `stretch` gives
    /// long paths.
    pub fn random_stretched<R: Rng>(n: usize, stretch: f64, rng: &mut R) -> TreeShape {
        Self::from_parents(
            (0..n)
                .map(|v| {
                    (v > 0).then(|| {
                        if rng.gen_bool(stretch) {
                            v - 1
                        } else {
                            rng.gen_range(0..v)
                        }
                    })
                })
                .collect(),
        )
    }

    /// Uniform labelled tree decoded from a random Prüfer sequence, rooted
    /// at its lowest label and relabelled in BFS order.
    pub fn random_uniform<R: Rng>(n: usize, rng: &mut R) -> TreeShape {
        if n <= 2 {
            return Self::path(n.max(1));
        }
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &x in &seq {
            degree[x] += 1;
        }
        let mut leaves: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
        let mut adj = vec![Vec::new(); n];
        for &x in &seq {
            let Reverse(leaf) = leaves.pop().expect("a leaf remains");
            adj[leaf].push(x);
            adj[x].push(leaf);
            degree[x] -= 1;
            if degree[x] == 1 {
                leaves.push(Reverse(x));
            }
        }
        let Reverse(a) = leaves.pop().expect("two nodes remain");
        let Reverse(b) = leaves.pop().expect("two nodes remain");
        adj[a].push(b);
        adj[b].push(a);

        let mut label = vec![usize::MAX; n];
        let mut parent = vec![None; n];
        let mut order = vec![0usize];
        label[0] = 0;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| label[u] == usize::MAX).collect();
            next.sort_unstable();
            for u in next {
                label[u] = order.len();
                parent[label[u]] = Some(label[v]);
                order.push(u);
            }
            i += 1;
        }
        Self::from_parents(parent)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_unique_c_gc(&self, v: usize) -> bool {
        matches!(self.children[v].as_slice(), [c] if self.children[*c].len() == 1)
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        for v in 1..self.len() {
            depth[v] = depth[self.parent[v].expect("non-root")] + 1;
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeCounts {
    pub n: usize,
    pub leaves: usize,
    pub uniques: usize,
}

/// Node count, childless nodes and unique-c-gc nodes (exactly one child,
/// which itself has exactly one child).
pub fn tree_stats(t: &TreeShape) -> TreeCounts {
    TreeCounts {
        n: t.len(),
        leaves: (0..t.len()).filter(|&v| t.children(v).is_empty()).count(),
        uniques: (0..t.len()).filter(|&v| t.is_unique_c_gc(v)).count(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SelectionRound {
    pub leaves: BTreeSet<NodeId>,
    pub uniques: BTreeSet<NodeId>,
}

impl SelectionRound {
    pub fn len(&self) -> usize {
        self.leaves.len() + self.uniques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty() && self.uniques.is_empty()
    }
}

/// All leaves, plus unique-c-gc nodes picked greedily top-down: a picked
/// node's only child may not be picked.
pub(crate) fn select_in<F>(root: NodeId, children: F) -> SelectionRound
where
    F: Fn(NodeId) -> Vec<NodeId>,
{
    let mut round = SelectionRound::default();
    let mut forbidden = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let kids = children(v);
        if kids.is_empty() {
            round.leaves.insert(v);
        } else if let [c] = kids.as_slice() {
            if !forbidden.contains(&v) && children(*c).len() == 1 {
                round.uniques.insert(v);
                forbidden.insert(*c);
            }
        }
        stack.extend(kids.into_iter().rev());
    }
    round
}

pub fn select_on_shape(t: &TreeShape) -> SelectionRound {
    select_in(NodeId(0), |v| t.children(v.0).iter().map(|&c| NodeId(c)).collect())
}
