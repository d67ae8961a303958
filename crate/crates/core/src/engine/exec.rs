use super::{EngineError, OpCounts, PhaseCost};
use crate::bsp::{mr_intersect, mr_join, mr_join_project, mr_semijoin, CostLedger, MachineConfig, SimError, Superstep};
use crate::relation::{Attr, Relation};

/// Issues operations either locally (no configuration) or through the
/// simulator, grouping them into barrier-delimited batches.
pub(crate) struct Runner<'c> {
    cfg: Option<&'c MachineConfig>,
    pub ledger: CostLedger,
    pub counts: OpCounts,
    pub phases: Vec<PhaseCost>,
    pub max_intermediate: usize,
    open: Option<(String, usize)>,
}

impl<'c> Runner<'c> {
    pub fn new(cfg: Option<&'c MachineConfig>) -> Self {
        Runner {
            cfg,
            ledger: CostLedger::new(),
            counts: OpCounts::default(),
            phases: Vec::new(),
            max_intermediate: 0,
            open: None,
        }
    }

    pub fn is_distributed(&self) -> bool {
        self.cfg.is_some()
    }

    pub fn begin_phase(&mut self, name: &str) {
        self.end_phase();
        self.open = Some((name.to_string(), self.ledger.rounds));
    }

    pub fn end_phase(&mut self) {
        if let Some((phase, from)) = self.open.take() {
            self.phases.push(PhaseCost {
                phase,
                rounds: self.ledger.rounds - from,
                communicated: self.ledger.communicated_since(from),
            });
        }
    }

    /// Runs `f` as one superstep: every operation it issues gets its own
    /// lane, so they all overlap.
    pub fn batch<T>(&mut self, f: impl FnOnce(&mut Batch<'_>) -> Result<T, SimError>) -> Result<T, EngineError> {
        let mut b = Batch {
            cfg: self.cfg,
            step: Superstep::new(),
            counts: &mut self.counts,
            largest_join: 0,
        };
        let out = f(&mut b);
        let largest = b.largest_join;
        b.step.barrier(&mut self.ledger);
        self.max_intermediate = self.max_intermediate.max(largest);
        match out {
            Ok(v) => Ok(v),
            Err(error @ SimError::Overload { .. }) => {
                self.end_phase();
                Err(EngineError::Aborted {
                    error,
                    ledger: Box::new(self.ledger.clone()),
                })
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub(crate) struct Batch<'a> {
    cfg: Option<&'a MachineConfig>,
    step: Superstep,
    counts: &'a mut OpCounts,
    largest_join: usize,
}

impl Batch<'_> {
    /// `s ⋉ r`.
    pub fn semijoin(&mut self, s: &Relation, r: &Relation) -> Result<Relation, SimError> {
        self.counts.semijoins += 1;
        match self.cfg {
            None => Ok(s.semijoin(r)),
            Some(cfg) => mr_semijoin(s, r, cfg, self.step.lane()),
        }
    }

    pub fn intersect(&mut self, r: &Relation, s: &Relation) -> Result<Relation, SimError> {
        self.counts.intersections += 1;
        match self.cfg {
            None => Ok(r.intersect(s)?),
            Some(cfg) => mr_intersect(r, s, cfg, self.step.lane()),
        }
    }

    pub fn join(&mut self, r: &Relation, s: &Relation) -> Result<Relation, SimError> {
        self.counts.joins += 1;
        let out = match self.cfg {
            None => r.join(s),
            Some(cfg) => mr_join(&[r.clone(), s.clone()], cfg, self.step.lane())?,
        };
        self.largest_join = self.largest_join.max(out.len());
        Ok(out)
    }

    /// `π_attrs(⋈ rs)` for materializing one node.
    pub fn materialize(&mut self, rs: &[Relation], attrs: &[Attr]) -> Result<Relation, SimError> {
        self.counts.materializations += 1;
        match self.cfg {
            None => Ok(crate::relation::serial_join(rs).project(attrs)?),
            Some(cfg) => mr_join_project(rs, attrs, cfg, self.step.lane()),
        }
    }
}
