use std::collections::BTreeSet;

use super::{log_gta, LogGtaOutput, TransformError};
use crate::ghd::{validate_ghd, Draft, Ghd, NodeId};
use crate::query::Query;

/// One merge pass, decided on a snapshot of the tree.
///
/// 1. Leaf children of each parent are paired in ascending id order.
/// 2. With an odd count the last leaf is merged into the parent.
/// 3. Top-down, a node with a single child whose own leaf-child count is
///    even is merged with that child.
///
/// A node takes part in at most one merge; earlier steps win. The merged
/// node keeps the id of the first leaf of a pair, or of the parent.
pub fn c_gta_pass(q: &Query, d: &Ghd) -> Result<Ghd, TransformError> {
    let report = validate_ghd(q, d);
    if !report.is_valid() {
        return Err(TransformError::Invalid(report.to_string()));
    }
    if d.len() < 2 {
        return Err(TransformError::TooSmall);
    }
    let leaf_children = |v: NodeId| -> Vec<NodeId> {
        d.children(v).iter().copied().filter(|&c| d.is_leaf(c)).collect()
    };
    let mut taken: BTreeSet<NodeId> = BTreeSet::new();
    let mut merges: Vec<(NodeId, NodeId)> = Vec::new();

    for v in d.node_ids() {
        let leaves = leaf_children(v);
        for pair in leaves.chunks(2) {
            let (keep, gone) = match pair {
                [a, b] => (*a, *b),
                [last] => (v, *last),
                _ => unreachable!(),
            };
            taken.insert(keep);
            taken.insert(gone);
            merges.push((keep, gone));
        }
    }
    for u in d.pre_order() {
        if let [c] = d.children(u) {
            let c = *c;
            if leaf_children(c).len() % 2 == 0 && !taken.contains(&u) && !taken.contains(&c) {
                taken.insert(u);
                taken.insert(c);
                merges.push((u, c));
            }
        }
    }

    let mut draft = Draft::from_ghd(d);
    for (keep, gone) in merges {
        let node = draft.node(gone).clone();
        for c in node.children {
            draft.reparent(c, keep);
        }
        let target = draft.node_mut(keep);
        target.chi.extend(node.chi);
        target.lambda.extend(node.lambda);
        draft.remove_leaf(gone);
    }
    Ok(draft.to_ghd())
}

/// `i` merge passes followed by Log-GTA. Passes stop early once a single
/// node is left.
pub fn c_gta_then_log(q: &Query, d: &Ghd, i: usize) -> Result<LogGtaOutput, TransformError> {
    let mut current = d.clone();
    for _ in 0..i {
        if current.len() < 2 {
            break;
        }
        current = c_gta_pass(q, &current)?;
    }
    log_gta(q, &current)
}

/// Node counts before and after each of `i` passes.
pub fn c_gta_sizes(q: &Query, d: &Ghd, i: usize) -> Result<Vec<usize>, TransformError> {
    let mut sizes = vec![d.len()];
    let mut current = d.clone();
    for _ in 0..i {
        if current.len() < 2 {
            break;
        }
        current = c_gta_pass(q, &current)?;
        sizes.push(current.len());
    }
    Ok(sizes)
}
