//! Depth-reducing rewrites of decompositions.
//!
//! [`log_gta`] repeatedly inactivates all leaves of the active tree together
//! with a set of non-adjacent unique-c-gc nodes, bringing depth down to
//! logarithmic while width grows to at most `max(w, 3·iw)`. [`c_gta_pass`]
//! merges leaf pairs and unique children to shrink the node count before
//! that.

mod cgta;
mod extended;
pub mod shape;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ghd::{validate_ghd, Ghd, NodeId};
use crate::query::Query;

pub use cgta::{c_gta_pass, c_gta_sizes, c_gta_then_log};
pub use extended::{ExtendedGhd, TraceEvent};
pub use shape::{select_on_shape, tree_stats, SelectionRound, TreeCounts, TreeShape};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("input is not a valid GHD: {0}")]
    Invalid(String),
    #[error("no cover of size ≤ {budget} for edge {parent}-{child}")]
    NoCover {
        parent: NodeId,
        child: NodeId,
        budget: usize,
    },
    #[error("node {0} is not an active leaf")]
    NotActiveLeaf(NodeId),
    #[error("node {0} is not a unique-c-gc node of the active tree")]
    NotUniqueCGc(NodeId),
    #[error("operation needs at least two nodes")]
    TooSmall,
    #[error("invariant broken after {step}: {detail}")]
    Invariant { step: String, detail: String },
}

/// Per-round record of a Log-GTA run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub active_before: usize,
    pub leaves: usize,
    pub uniques: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogGtaOutput {
    pub ghd: Ghd,
    pub rounds: Vec<RoundSummary>,
    pub trace: Vec<TraceEvent>,
    /// Height recorded when each node was inactivated.
    pub heights: BTreeMap<NodeId, usize>,
}

pub fn log_gta(q: &Query, d: &Ghd) -> Result<LogGtaOutput, TransformError> {
    run_log_gta(q, d, false)
}

/// As [`log_gta`], re-checking every state invariant after each
/// inactivation.
pub fn log_gta_checked(q: &Query, d: &Ghd) -> Result<LogGtaOutput, TransformError> {
    run_log_gta(q, d, true)
}

fn run_log_gta(q: &Query, d: &Ghd, check: bool) -> Result<LogGtaOutput, TransformError> {
    let mut e = ExtendedGhd::extend(q, d)?;
    let verify = |e: &ExtendedGhd, step: String| -> Result<(), TransformError> {
        if check {
            e.check_invariants(q)
                .map_err(|detail| TransformError::Invariant { step, detail })?;
        }
        Ok(())
    };
    verify(&e, "extend".into())?;
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    while e.active_count() > 0 {
        let round = rounds.len() + 1;
        let selection = e.select_round();
        rounds.push(RoundSummary {
            round,
            active_before: e.active_count(),
            leaves: selection.leaves.len(),
            uniques: selection.uniques.len(),
        });
        for &u in &selection.uniques {
            let Some((c, gc)) = e.unique_chain(u) else {
                log::warn!("round {round}: node {u} is no longer unique-c-gc, skipped");
                continue;
            };
            let s = e.inactivate_unique_c_gc(u)?;
            let heights = [u, c].into_iter().map(|v| (v, e.heights()[&v])).collect();
            trace.push(TraceEvent::UniqueCGc {
                round,
                node: u,
                child: c,
                grandchild: gc,
                new_node: s,
                heights,
            });
            verify(&e, format!("unique-c-gc on {u}"))?;
        }
        for &l in &selection.leaves {
            if !e.is_active_leaf(l) {
                log::warn!("round {round}: node {l} is no longer an active leaf, skipped");
                continue;
            }
            let height = e.inactivate_leaf(l)?;
            trace.push(TraceEvent::Leaf {
                round,
                node: l,
                height,
            });
            verify(&e, format!("leaf on {l}"))?;
        }
    }
    let ghd = e.base();
    debug_assert!(validate_ghd(q, &ghd).is_valid());
    Ok(LogGtaOutput {
        ghd,
        rounds,
        trace,
        heights: e.heights().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghd::{fixture_ghd, stats, GhdFamily};

    #[test]
    fn triangle_chain_15_gets_width_3_depth_2() {
        let (q, d) = fixture_ghd(GhdFamily::TriangleChain(15)).unwrap();
        let out = log_gta_checked(&q, &d).unwrap();
        assert!(validate_ghd(&q, &out.ghd).is_valid());
        let s = stats(&q, &out.ghd, 3);
        assert_eq!((s.w, s.d), (3, 2));
        assert_eq!(out.rounds.len(), 3);
        assert_eq!(out.ghd.len(), 7);
    }

    #[test]
    fn star_stays_shallow() {
        let (q, d) = fixture_ghd(GhdFamily::Star(9)).unwrap();
        let out = log_gta_checked(&q, &d).unwrap();
        assert!(out.ghd.depth() <= 1);
        assert_eq!(out.ghd, d);
    }

    #[test]
    fn single_node_unchanged() {
        let q = Query::parse("R(A,B)\nS(B,C)").unwrap();
        let d = Ghd::single_node(&q);
        let out = log_gta(&q, &d).unwrap();
        assert_eq!(out.ghd, d);
        assert_eq!(out.rounds.len(), 1);
    }

    #[test]
    fn recorded_heights_match_final_tree() {
        let (q, d) = fixture_ghd(GhdFamily::Chain(64)).unwrap();
        let out = log_gta_checked(&q, &d).unwrap();
        let real = out.ghd.heights();
        assert_eq!(out.heights, real);
        assert!(out.ghd.width() <= 3);
    }
}
