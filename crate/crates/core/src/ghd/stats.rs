use std::collections::BTreeSet;

use itertools::Itertools;
use serde::Serialize;

use super::Ghd;
use crate::query::{AtomId, Query};
use crate::relation::Attr;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GhdStats {
    pub w: usize,
    pub d: usize,
    /// `None` when some adjacent pair needs a cover larger than the budget.
    pub iw: Option<usize>,
    pub complete: bool,
    pub node_count: usize,
}

/// Smallest set of atoms whose attributes contain `target`, searching sizes
/// up to `budget`. Among minimum covers the lexicographically smallest id set
/// wins.
pub fn min_cover(q: &Query, target: &BTreeSet<Attr>, budget: usize) -> Option<BTreeSet<AtomId>> {
    if target.is_empty() {
        return Some(BTreeSet::new());
    }
    let relevant: Vec<(AtomId, BTreeSet<Attr>)> = q
        .atoms()
        .iter()
        .map(|a| (a.id, a.attr_set()))
        .filter(|(_, attrs)| !attrs.is_disjoint(target))
        .collect();
    for size in 1..=budget.min(relevant.len()) {
        for combo in relevant.iter().combinations(size) {
            let covered = target
                .iter()
                .all(|v| combo.iter().any(|(_, attrs)| attrs.contains(v)));
            if covered {
                return Some(combo.into_iter().map(|(id, _)| *id).collect());
            }
        }
    }
    None
}

/// Width, depth, intersection width and completeness of `d`. Intersection
/// width is exact, found by enumerating covers of size at most `iw_budget`.
pub fn stats(q: &Query, d: &Ghd, iw_budget: usize) -> GhdStats {
    let mut iw = Some(0);
    for (p, c) in d.edges() {
        let shared: BTreeSet<Attr> = d.chi(p).intersection(d.chi(c)).copied().collect();
        match min_cover(q, &shared, iw_budget) {
            Some(cover) => iw = iw.map(|m: usize| m.max(cover.len())),
            None => {
                iw = None;
                break;
            }
        }
    }
    GhdStats {
        w: d.width(),
        d: d.depth(),
        iw,
        complete: d.is_complete(q),
        node_count: d.len(),
    }
}
