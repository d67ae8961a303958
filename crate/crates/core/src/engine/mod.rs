//! Execution engines.
//!
//! All engines follow the same plan: build one relation per decomposition
//! node, remove dangling tuples with semijoins, then join the reduced
//! relations bottom-up. They differ in how operations are scheduled:
//!
//! * [`serial_yannakakis`] runs every operation locally, one at a time.
//! * [`dym_n`] issues the same sequence through the simulator.
//! * [`dym_d`] processes all leaves of the shrinking tree in parallel, so the
//!   round count depends on depth and `log n` rather than on `n`.
//! * [`gym`] accepts any width: it materializes each node's join first and
//!   then runs [`dym_d`] (or [`dym_n`] with [`GymMode::Sequential`]) on the
//!   resulting acyclic instance.

mod exec;
mod materialize;
mod parallel;
mod sequential;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bsp::{CostLedger, MachineConfig, SimError};
use crate::ghd::{complete_and_minimize, validate_ghd, Ghd, GhdError, NodeId};
use crate::query::{oracle_join_bounded, Instance, QueryError};
use crate::relation::{Relation, RelationError};

use exec::Runner;

pub use materialize::{filter_atoms, materialized_instance, node_plans, NodePlan};
pub use sequential::Passes;

/// The live relation at every decomposition node.
pub type NodeStates = BTreeMap<NodeId, Relation>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("width must be 1, got {0}")]
    Width(usize),
    #[error("decomposition is not complete")]
    Incomplete,
    #[error("invalid GHD: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    /// A reducer overflowed; the ledger ends with the aborted round.
    #[error("{error}")]
    Aborted { error: SimError, ledger: Box<CostLedger> },
    #[error(transparent)]
    Ghd(#[from] GhdError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum EngineKind {
    Serial,
    DymN,
    #[default]
    DymD,
    Gym,
}

impl EngineKind {
    pub fn label(self) -> &'static str {
        match self {
            EngineKind::Serial => "serial",
            EngineKind::DymN => "dym-n",
            EngineKind::DymD => "dym-d",
            EngineKind::Gym => "gym",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [EngineKind::Serial, EngineKind::DymN, EngineKind::DymD, EngineKind::Gym]
            .into_iter()
            .find(|k| k.label() == s)
    }
}

/// Scheduling used by [`gym`] after materialization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GymMode {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub semijoins: usize,
    pub intersections: usize,
    pub joins: usize,
    pub materializations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseCost {
    pub phase: String,
    pub rounds: usize,
    pub communicated: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub engine: String,
    pub input_size: usize,
    pub output_size: usize,
    pub node_count: usize,
    pub width: usize,
    pub memory: Option<usize>,
    /// Whether `M < IN`, the regime the cost model is meant for.
    pub memory_below_input: Option<bool>,
    pub rounds: usize,
    pub communicated: u64,
    pub phases: Vec<PhaseCost>,
    pub op_counts: OpCounts,
    /// Largest relation produced by the join phase.
    pub max_intermediate: usize,
    /// Largest materialized node relation.
    pub max_idb: usize,
    pub upward_iterations: Option<usize>,
    /// `X = Σ 2^depth` over the leaves of the upward working tree, before
    /// the first iteration and after each one. `None` on overflow.
    pub upward_potentials: Option<Vec<Option<u128>>>,
    pub ledger: Option<CostLedger>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The join-phase monitor: no intermediate exceeds the output.
    pub fn intermediates_within_output(&self) -> bool {
        self.max_intermediate <= self.output_size
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineRun {
    /// Over all query attributes in id order.
    pub output: Relation,
    pub report: RunReport,
    /// Node relations right after the semijoin phase.
    pub reduced: NodeStates,
}

fn check_valid(inst: &Instance, d: &Ghd) -> Result<(), EngineError> {
    let report = validate_ghd(&inst.query, d);
    if report.is_valid() {
        Ok(())
    } else {
        Err(EngineError::Invalid(report.to_string()))
    }
}

fn check_width_one(inst: &Instance, d: &Ghd) -> Result<(), EngineError> {
    check_valid(inst, d)?;
    if d.width() != 1 {
        return Err(EngineError::Width(d.width()));
    }
    if !d.is_complete(&inst.query) {
        return Err(EngineError::Incomplete);
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Schedule {
    Sequential,
    Parallel,
}

fn execute(
    kind: EngineKind,
    inst: &Instance,
    d: &Ghd,
    cfg: Option<&MachineConfig>,
    schedule: Schedule,
) -> Result<EngineRun, EngineError> {
    let mut runner = Runner::new(cfg);
    let mut states = materialize::materialize(inst, d, &mut runner)?;
    let max_idb = states.values().map(Relation::len).max().unwrap_or(0);
    let mut upward = None;
    let output = match schedule {
        Schedule::Sequential => {
            sequential::reduce(d, &mut states, &mut runner, Passes::Full)?;
            sequential::join_up(d, states.clone(), &mut runner)?
        }
        Schedule::Parallel => {
            upward = Some(parallel::reduce(d, &mut states, &mut runner)?);
            parallel::join_phase(d, states.clone(), &mut runner)?
        }
    };
    let output = output.project(&inst.output_schema())?.with_name("out");
    let input_size = inst.input_size();
    let distributed = runner.is_distributed();
    let report = RunReport {
        engine: kind.label().to_string(),
        input_size,
        output_size: output.len(),
        node_count: d.len(),
        width: d.width(),
        memory: cfg.map(|c| c.memory),
        memory_below_input: cfg.map(|c| c.memory < input_size),
        rounds: runner.ledger.rounds,
        communicated: runner.ledger.communicated,
        phases: if distributed { runner.phases.clone() } else { Vec::new() },
        op_counts: runner.counts,
        max_intermediate: runner.max_intermediate,
        max_idb,
        upward_iterations: upward.as_ref().map(|t| t.iterations),
        upward_potentials: upward.map(|t| t.potentials),
        ledger: distributed.then(|| runner.ledger.clone()),
    };
    if let Some(false) = report.memory_below_input {
        log::warn!("memory {} is not below the input size {input_size}", report.memory.unwrap_or(0));
    }
    Ok(EngineRun {
        output,
        report,
        reduced: states,
    })
}

/// Local Yannakakis on a complete width-1 decomposition.
pub fn serial_yannakakis(inst: &Instance, d: &Ghd) -> Result<EngineRun, EngineError> {
    check_width_one(inst, d)?;
    execute(EngineKind::Serial, inst, d, None, Schedule::Sequential)
}

/// Yannakakis with every operation run through the simulator in sequence.
pub fn dym_n(inst: &Instance, d: &Ghd, cfg: &MachineConfig) -> Result<EngineRun, EngineError> {
    check_width_one(inst, d)?;
    execute(EngineKind::DymN, inst, d, Some(cfg), Schedule::Sequential)
}

/// Yannakakis with all leaves of the shrinking tree handled in parallel.
pub fn dym_d(inst: &Instance, d: &Ghd, cfg: &MachineConfig) -> Result<EngineRun, EngineError> {
    check_width_one(inst, d)?;
    execute(EngineKind::DymD, inst, d, Some(cfg), Schedule::Parallel)
}

/// Any-width evaluation: completes the decomposition if needed,
/// materializes every node in one superstep, then runs the chosen schedule.
pub fn gym(inst: &Instance, d: &Ghd, cfg: &MachineConfig, mode: GymMode) -> Result<EngineRun, EngineError> {
    check_valid(inst, d)?;
    let completed;
    let d = if d.is_complete(&inst.query) {
        d
    } else {
        completed = complete_and_minimize(&inst.query, d)?;
        &completed
    };
    let schedule = match mode {
        GymMode::Parallel => Schedule::Parallel,
        GymMode::Sequential => Schedule::Sequential,
    };
    execute(EngineKind::Gym, inst, d, Some(cfg), schedule)
}

/// Runs `kind` with `cfg` (ignored by the serial engine).
pub fn run_engine(kind: EngineKind, inst: &Instance, d: &Ghd, cfg: &MachineConfig) -> Result<EngineRun, EngineError> {
    match kind {
        EngineKind::Serial => serial_yannakakis(inst, d),
        EngineKind::DymN => dym_n(inst, d, cfg),
        EngineKind::DymD => dym_d(inst, d, cfg),
        EngineKind::Gym => gym(inst, d, cfg, GymMode::Parallel),
    }
}

/// Node relations after a local semijoin phase on a width-1 decomposition.
pub fn semijoin_phase(inst: &Instance, d: &Ghd, passes: Passes) -> Result<NodeStates, EngineError> {
    check_width_one(inst, d)?;
    let mut runner = Runner::new(None);
    let mut states = materialize::materialize(inst, d, &mut runner)?;
    sequential::reduce(d, &mut states, &mut runner, passes)?;
    Ok(states)
}

/// True iff every row of every state extends to an output row. The output
/// is computed by brute force and may hold at most `budget` rows.
pub fn check_full_reduction(inst: &Instance, states: &NodeStates, budget: usize) -> Result<bool, EngineError> {
    let out = oracle_join_bounded(inst, budget)?;
    for r in states.values() {
        let shadow = out.project(r.schema())?;
        if !r.rows().is_subset(shadow.rows()) {
            return Ok(false);
        }
    }
    Ok(true)
}
