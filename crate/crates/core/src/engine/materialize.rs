use std::collections::{BTreeMap, BTreeSet};

use super::exec::Runner;
use super::{EngineError, NodeStates};
use crate::ghd::{Ghd, NodeId, NodeSpec};
use crate::query::{AtomId, Database, Instance, Query, Table};
use crate::relation::{Attr, Relation};

/// What a node's IDB is built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePlan {
    pub node: NodeId,
    /// `λ(v)` followed by the filter atoms assigned to `v`.
    pub inputs: Vec<AtomId>,
    /// `χ(v)` in attribute order.
    pub schema: Vec<Attr>,
    /// The IDB is a single atom's relation as is.
    pub identity: bool,
}

/// Atoms that no node both lists in `λ` and fully holds in `χ` would only be
/// partially enforced by the IDBs. Each such atom is added as an extra join
/// input to the lowest-id node whose `χ` contains it.
pub fn filter_atoms(q: &Query, d: &Ghd) -> BTreeMap<NodeId, Vec<AtomId>> {
    let mut out: BTreeMap<NodeId, Vec<AtomId>> = BTreeMap::new();
    for atom in q.atoms() {
        let attrs = atom.attr_set();
        let enforced = d
            .nodes()
            .any(|n| n.lambda.contains(&atom.id) && attrs.is_subset(&n.chi));
        if enforced {
            continue;
        }
        if let Some(n) = d.nodes().find(|n| attrs.is_subset(&n.chi)) {
            out.entry(n.id).or_default().push(atom.id);
        }
    }
    out
}

pub fn node_plans(q: &Query, d: &Ghd) -> Vec<NodePlan> {
    let filters = filter_atoms(q, d);
    d.nodes()
        .map(|n| {
            let extra = filters.get(&n.id).cloned().unwrap_or_default();
            let schema: Vec<Attr> = n.chi.iter().copied().collect();
            let identity = extra.is_empty()
                && n.lambda.len() == 1
                && n.lambda
                    .iter()
                    .all(|&a| q.atom(a).is_some_and(|atom| atom.attr_set() == n.chi));
            let mut inputs: Vec<AtomId> = n.lambda.iter().copied().collect();
            inputs.extend(extra);
            NodePlan {
                node: n.id,
                inputs,
                schema,
                identity,
            }
        })
        .collect()
}

/// Builds every node's IDB in one superstep. Identity nodes cost nothing.
pub(crate) fn materialize(inst: &Instance, d: &Ghd, runner: &mut Runner<'_>) -> Result<NodeStates, EngineError> {
    let plans = node_plans(&inst.query, d);
    runner.begin_phase("materialize");
    let states = runner.batch(|b| {
        let mut states = NodeStates::new();
        for plan in &plans {
            let rels: Vec<Relation> = plan.inputs.iter().map(|&a| inst.atom_relation(a)).collect();
            let idb = if plan.identity {
                rels.into_iter().next().expect("identity node has one atom")
            } else if rels.is_empty() {
                Relation::unit(format!("V{}", plan.node.0))
            } else {
                b.materialize(&rels, &plan.schema)?
            };
            states.insert(plan.node, idb.with_name(format!("V{}", plan.node.0)));
        }
        Ok(states)
    })?;
    runner.end_phase();
    Ok(states)
}

/// The acyclic query `Q′` over the IDBs of `d`, one atom `V<id>` per node,
/// together with `d` relabelled as a width-1 decomposition of it.
pub fn materialized_instance(inst: &Instance, d: &Ghd) -> Result<(Instance, Ghd), EngineError> {
    let mut runner = Runner::new(None);
    let states = materialize(inst, d, &mut runner)?;
    let q = &inst.query;
    let atoms: Vec<(String, Vec<String>)> = states
        .iter()
        .map(|(id, r)| {
            let names = r.schema().iter().map(|&a| q.attr_name(a).to_string()).collect();
            (format!("V{}", id.0), names)
        })
        .collect();
    let query = Query::new(&atoms)?;
    let mut db = Database::new();
    for ((name, cols), r) in atoms.iter().zip(states.values()) {
        db.insert(name.clone(), Table::new(cols.clone(), r.rows().iter().cloned())?);
    }
    let index: BTreeMap<NodeId, AtomId> = states.keys().enumerate().map(|(i, &id)| (id, AtomId(i))).collect();
    let specs = d
        .nodes()
        .map(|n| NodeSpec {
            id: n.id,
            chi: n
                .chi
                .iter()
                .map(|&a| query.attr_by_name(q.attr_name(a)).expect("attribute carried over"))
                .collect(),
            lambda: BTreeSet::from([index[&n.id]]),
            children: n.children.clone(),
        })
        .collect();
    let ghd = Ghd::new(d.root(), specs)?;
    Ok((Instance::new(query, db)?, ghd))
}
