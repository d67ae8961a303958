use super::exec::Runner;
use super::{EngineError, NodeStates};
use crate::ghd::Ghd;
use crate::relation::Relation;

/// Which sub-phases of the semijoin phase to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Passes {
    Full,
    UpwardOnly,
}

/// Semijoin phase one operation at a time: `S := S ⋉ R` in post-order,
/// then `R := R ⋉ S` in pre-order.
pub(crate) fn reduce(d: &Ghd, states: &mut NodeStates, runner: &mut Runner<'_>, passes: Passes) -> Result<(), EngineError> {
    runner.begin_phase("semijoin_up");
    for v in d.post_order() {
        let Some(p) = d.parent(v) else { continue };
        let out = runner.batch(|b| b.semijoin(&states[&p], &states[&v]))?;
        states.insert(p, out);
    }
    if passes == Passes::Full {
        runner.begin_phase("semijoin_down");
        for v in d.pre_order() {
            let Some(p) = d.parent(v) else { continue };
            let out = runner.batch(|b| b.semijoin(&states[&v], &states[&p]))?;
            states.insert(v, out);
        }
    }
    runner.end_phase();
    Ok(())
}

/// Join phase: each node is joined into its parent in post-order.
pub(crate) fn join_up(d: &Ghd, mut acc: NodeStates, runner: &mut Runner<'_>) -> Result<Relation, EngineError> {
    runner.begin_phase("join");
    for v in d.post_order() {
        let Some(p) = d.parent(v) else { continue };
        let out = runner.batch(|b| b.join(&acc[&p], &acc[&v]))?;
        acc.remove(&v);
        acc.insert(p, out);
    }
    runner.end_phase();
    Ok(acc.remove(&d.root()).expect("root survives"))
}
