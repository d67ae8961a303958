//! A tuple-counting MapReduce simulator.
//!
//! Each round maps tuples to virtual reducers, each holding at most `M`
//! tuples, and every reducer computes locally. A [`CostLedger`] records per
//! round how many tuples were sent to reducers, how many came out, how many
//! reducers were used and the heaviest reducer load. Reducers are sparse:
//! only non-empty ones exist.

mod primitives;

use serde::Serialize;
use thiserror::Error;

use crate::relation::{RelationError, Row};

pub use primitives::{mr_dedup, mr_intersect, mr_join, mr_join_project, mr_semijoin};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("round {round}: a reducer received {load} tuples, memory is {memory}")]
    Overload {
        round: usize,
        load: usize,
        memory: usize,
    },
    #[error("bad machine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// Per-reducer memory `M`, the exponent ε of the `M = IN^{1/ε}` regime and
/// the seed behind every hash function and random choice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineConfig {
    pub memory: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Upper limit on the number of first-level buckets used by duplicate
    /// elimination and intersection.
    pub bucket_cap: usize,
}

pub const DEFAULT_BUCKET_CAP: usize = 1 << 20;

impl MachineConfig {
    pub fn new(memory: usize, seed: u64) -> Result<Self, SimError> {
        if memory < 2 {
            return Err(SimError::Config(format!("memory must be at least 2, got {memory}")));
        }
        Ok(MachineConfig {
            memory,
            epsilon: 2.0,
            seed,
            bucket_cap: DEFAULT_BUCKET_CAP,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, SimError> {
        if epsilon.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) {
            return Err(SimError::Config(format!("epsilon must exceed 1, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_bucket_cap(mut self, cap: usize) -> Self {
        self.bucket_cap = cap.max(1);
        self
    }
}

/// `B(X, M) = X² / M`.
pub fn cost_bound(x: f64, m: f64) -> f64 {
    x * x / m
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub tuples_in: u64,
    pub tuples_out: u64,
    pub reducer_count: u64,
    pub max_load: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    pub rounds: usize,
    pub communicated: u64,
    pub aborted: bool,
    pub per_round: Vec<RoundRecord>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one round.
    pub fn record(&mut self, tuples_in: usize, tuples_out: usize, reducer_count: usize, max_load: usize) {
        self.rounds += 1;
        self.communicated += (tuples_in + tuples_out) as u64;
        self.per_round.push(RoundRecord {
            round: self.rounds,
            tuples_in: tuples_in as u64,
            tuples_out: tuples_out as u64,
            reducer_count: reducer_count as u64,
            max_load: max_load as u64,
        });
    }

    /// Records an aborted round and returns the matching error.
    pub(crate) fn abort(&mut self, tuples_in: usize, reducer_count: usize, load: usize, memory: usize) -> SimError {
        self.record(tuples_in, 0, reducer_count, load);
        self.aborted = true;
        SimError::Overload {
            round: self.rounds,
            load,
            memory,
        }
    }

    /// Appends lanes that ran side by side: their `i`-th rounds share one
    /// round here. An empty set of lanes adds nothing.
    pub fn absorb_parallel(&mut self, lanes: Vec<CostLedger>) {
        let span = lanes.iter().map(|l| l.rounds).max().unwrap_or(0);
        for i in 0..span {
            let mut merged = RoundRecord::default();
            for r in lanes.iter().filter_map(|l| l.per_round.get(i)) {
                merged.tuples_in += r.tuples_in;
                merged.tuples_out += r.tuples_out;
                merged.reducer_count += r.reducer_count;
                merged.max_load = merged.max_load.max(r.max_load);
            }
            self.rounds += 1;
            self.communicated += merged.tuples_in + merged.tuples_out;
            merged.round = self.rounds;
            self.per_round.push(merged);
        }
        self.aborted |= lanes.iter().any(|l| l.aborted);
    }

    /// Appends another ledger's rounds after this one's.
    pub fn absorb_sequential(&mut self, other: CostLedger) {
        self.absorb_parallel(vec![other]);
    }

    pub fn max_load(&self) -> u64 {
        self.per_round.iter().map(|r| r.max_load).max().unwrap_or(0)
    }

    /// Communication of the rounds from index `from` on.
    pub fn communicated_since(&self, from: usize) -> u64 {
        self.per_round[from..]
            .iter()
            .map(|r| r.tuples_in + r.tuples_out)
            .sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ledger serializes");
        s.push('\n');
        s
    }
}

/// Operations issued between two barriers. Each [`Superstep::lane`] gets its
/// own ledger; [`Superstep::barrier`] folds them into the run's ledger so
/// that the lanes' rounds overlap.
#[derive(Debug, Default)]
pub struct Superstep {
    lanes: Vec<CostLedger>,
}

impl Superstep {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lane(&mut self) -> &mut CostLedger {
        self.lanes.push(CostLedger::new());
        self.lanes.last_mut().expect("just pushed")
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn barrier(self, ledger: &mut CostLedger) {
        ledger.absorb_parallel(self.lanes);
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded hash of a row.
pub(crate) fn hash_row(seed: u64, row: &[i64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &v in row {
        h = mix64(h ^ (v as u64).wrapping_add(GOLDEN));
    }
    mix64(h ^ row.len() as u64)
}

/// Order-dependent fingerprint of a row sequence, used to derive per-call
/// random streams that only depend on the seed and the input.
pub(crate) fn fingerprint<'a>(seed: u64, rows: impl IntoIterator<Item = &'a Row>) -> u64 {
    rows.into_iter()
        .fold(mix64(seed ^ GOLDEN), |acc, r| mix64(acc ^ hash_row(seed, r)))
}
