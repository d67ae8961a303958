use std::collections::{BTreeMap, BTreeSet};

use super::validate::unique_covers;
use super::{validate_ghd, Draft, Ghd, GhdError, NodeId};
use crate::query::{AtomId, Query};

/// Makes `d` minimal and complete.
///
/// Minimization deletes, lowest id first, any node of degree at most two
/// that is the only node containing some atom's attributes; it repeats until
/// nothing changes. Completion then hangs a leaf `λ = χ = atom` under the
/// shallowest node containing each atom missing from every `λ`.
pub fn complete_and_minimize(q: &Query, d: &Ghd) -> Result<Ghd, GhdError> {
    let report = validate_ghd(q, d);
    if !report.is_valid() {
        return Err(GhdError::Invalid(report.to_string()));
    }
    let mut draft = Draft::from_ghd(d);
    minimize(q, &mut draft);
    complete(q, &mut draft);
    Ok(draft.to_ghd())
}

fn minimize(q: &Query, draft: &mut Draft) {
    loop {
        if draft.nodes.len() == 1 {
            return;
        }
        let chis: BTreeMap<NodeId, _> = draft.nodes.iter().map(|(&id, n)| (id, &n.chi)).collect();
        let owners = unique_covers(q, &chis);
        let victim = draft
            .nodes
            .keys()
            .copied()
            .find(|&id| draft.degree(id) <= 2 && !owners.contains(&id));
        match victim {
            Some(id) => {
                log::debug!("minimize: deleting node {id}");
                draft.delete_and_reconnect(id);
            }
            None => return,
        }
    }
}

fn complete(q: &Query, draft: &mut Draft) {
    let assigned: BTreeSet<AtomId> = draft
        .nodes
        .values()
        .flat_map(|n| n.lambda.iter().copied())
        .collect();
    for atom in q.atoms() {
        if assigned.contains(&atom.id) {
            continue;
        }
        let attrs = atom.attr_set();
        let depths = draft.depths();
        let host = draft
            .nodes
            .iter()
            .filter(|(_, n)| attrs.is_subset(&n.chi))
            .map(|(&id, _)| (depths[&id], id))
            .min()
            .map(|(_, id)| id)
            .expect("a valid decomposition contains every atom somewhere");
        draft.add_node(Some(host), attrs, [atom.id].into());
    }
}
