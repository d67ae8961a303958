use std::collections::{BTreeMap, BTreeSet};

use super::exec::Runner;
use super::{EngineError, NodeStates};
use crate::ghd::{Ghd, NodeId};
use crate::relation::Relation;

/// What happens to the leaves under one parent in one iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Step {
    /// The parent's only leaf child is folded into it.
    Absorb { parent: NodeId, leaf: NodeId },
    /// Two or three sibling leaves collapse into the first.
    Group { parent: NodeId, members: Vec<NodeId> },
}

/// The shrinking tree the upward sub-phase and the join phase work on.
struct Working {
    root: NodeId,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    depth: BTreeMap<NodeId, usize>,
}

impl Working {
    fn new(d: &Ghd) -> Self {
        Working {
            root: d.root(),
            children: d
                .nodes()
                .map(|n| (n.id, n.children.iter().copied().collect()))
                .collect(),
            depth: d.depths(),
        }
    }

    fn len(&self) -> usize {
        self.children.len()
    }

    fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children
            .iter()
            .filter(|(_, c)| c.is_empty())
            .map(|(&id, _)| id)
    }

    /// `X = Σ 2^depth` over the leaves; `None` when it does not fit.
    fn potential(&self) -> Option<u128> {
        self.leaves().try_fold(0u128, |acc, l| {
            let d = u32::try_from(self.depth[&l]).ok()?;
            acc.checked_add(1u128.checked_shl(d).filter(|&x| x != 0)?)
        })
    }

    fn plan(&self) -> Vec<Step> {
        let mut by_parent: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&p, kids) in &self.children {
            for &c in kids {
                if self.children[&c].is_empty() {
                    by_parent.entry(p).or_default().push(c);
                }
            }
        }
        let mut steps = Vec::new();
        for (parent, leaves) in by_parent {
            if let [leaf] = leaves[..] {
                steps.push(Step::Absorb { parent, leaf });
                continue;
            }
            let mut groups: Vec<Vec<NodeId>> = leaves.chunks(2).map(<[NodeId]>::to_vec).collect();
            if let Some(odd) = groups.pop_if(|g| g.len() == 1) {
                groups.last_mut().expect("at least one pair").push(odd[0]);
            }
            steps.extend(groups.into_iter().map(|members| Step::Group { parent, members }));
        }
        steps
    }

    fn remove(&mut self, parent: NodeId, gone: NodeId) {
        self.children.remove(&gone);
        self.children.get_mut(&parent).expect("live parent").remove(&gone);
    }
}

/// Trace of one upward sub-phase.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct UpwardTrace {
    pub iterations: usize,
    /// Potential before the first iteration and after each one.
    pub potentials: Vec<Option<u128>>,
}

/// Semijoin phase. Upward, each iteration folds lone leaves into their
/// parents and replaces sibling groups `R1, R2[, R3]` under `S` by
/// `(S⋉R1) ∩ (S⋉R2) [∩ (S⋉R3)]` at `R1`'s position. Downward, each depth
/// level is semijoined with its parents in one superstep.
pub(crate) fn reduce(d: &Ghd, states: &mut NodeStates, runner: &mut Runner<'_>) -> Result<UpwardTrace, EngineError> {
    runner.begin_phase("semijoin_up");
    let mut w = Working::new(d);
    let mut token = states.clone();
    // A node's upward-reduced relation is its token at the moment it
    // becomes a leaf.
    let mut settled: NodeStates = w.leaves().map(|l| (l, token[&l].clone())).collect();
    let mut trace = UpwardTrace {
        iterations: 0,
        potentials: vec![w.potential()],
    };
    while w.len() > 1 {
        let steps = w.plan();
        let firsts = runner.batch(|b| {
            steps
                .iter()
                .map(|step| match step {
                    Step::Absorb { parent, leaf } => Ok(vec![b.semijoin(&token[parent], &token[leaf])?]),
                    Step::Group { parent, members } => members
                        .iter()
                        .map(|m| b.semijoin(&token[parent], &token[m]))
                        .collect(),
                })
                .collect::<Result<Vec<Vec<Relation>>, _>>()
        })?;
        let mut merged = combine(runner, &steps, firsts, |b, x, y| b.intersect(x, y))?;
        for step in &steps {
            let out = merged.remove(0);
            match step {
                Step::Absorb { parent, leaf } => {
                    token.insert(*parent, out);
                    w.remove(*parent, *leaf);
                }
                Step::Group { parent, members } => {
                    token.insert(members[0], out);
                    for &m in &members[1..] {
                        w.remove(*parent, m);
                    }
                }
            }
        }
        for step in &steps {
            if let Step::Absorb { parent, .. } = step {
                if w.children[parent].is_empty() {
                    settled.insert(*parent, token[parent].clone());
                }
            }
        }
        trace.iterations += 1;
        trace.potentials.push(w.potential());
    }
    settled.insert(w.root, token[&w.root].clone());

    runner.begin_phase("semijoin_down");
    let depths = d.depths();
    let max_depth = depths.values().copied().max().unwrap_or(0);
    *states = NodeStates::new();
    states.insert(d.root(), settled[&d.root()].clone());
    for level in 1..=max_depth {
        let nodes: Vec<NodeId> = depths.iter().filter(|&(_, &l)| l == level).map(|(&v, _)| v).collect();
        let out = runner.batch(|b| {
            nodes
                .iter()
                .map(|v| {
                    let p = d.parent(*v).expect("non-root");
                    b.semijoin(&settled[v], &states[&p])
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        states.extend(nodes.into_iter().zip(out));
    }
    runner.end_phase();
    Ok(trace)
}

/// Join phase mirroring the upward sub-phase: `S ⋈ R` for lone leaves and
/// `(R1 ⋈ S) ⋈ (R2 ⋈ S) [⋈ (R3 ⋈ S)]` for sibling groups.
pub(crate) fn join_phase(d: &Ghd, mut acc: NodeStates, runner: &mut Runner<'_>) -> Result<Relation, EngineError> {
    runner.begin_phase("join");
    let mut w = Working::new(d);
    while w.len() > 1 {
        let steps = w.plan();
        let firsts = runner.batch(|b| {
            steps
                .iter()
                .map(|step| match step {
                    Step::Absorb { parent, leaf } => Ok(vec![b.join(&acc[parent], &acc[leaf])?]),
                    Step::Group { parent, members } => members
                        .iter()
                        .map(|m| b.join(&acc[m], &acc[parent]))
                        .collect(),
                })
                .collect::<Result<Vec<Vec<Relation>>, _>>()
        })?;
        let mut merged = combine(runner, &steps, firsts, |b, x, y| b.join(x, y))?;
        for step in &steps {
            let out = merged.remove(0);
            match step {
                Step::Absorb { parent, leaf } => {
                    acc.insert(*parent, out);
                    acc.remove(leaf);
                    w.remove(*parent, *leaf);
                }
                Step::Group { parent, members } => {
                    acc.insert(members[0], out);
                    for &m in &members[1..] {
                        acc.remove(&m);
                        w.remove(*parent, m);
                    }
                }
            }
        }
    }
    runner.end_phase();
    Ok(acc.remove(&w.root).expect("root survives"))
}

/// Folds each group's partial results pairwise, one superstep per fold
/// level, so pairs take one extra superstep and triples two.
fn combine(
    runner: &mut Runner<'_>,
    steps: &[Step],
    mut parts: Vec<Vec<Relation>>,
    op: impl Fn(&mut super::exec::Batch<'_>, &Relation, &Relation) -> Result<Relation, crate::bsp::SimError>,
) -> Result<Vec<Relation>, EngineError> {
    debug_assert_eq!(steps.len(), parts.len());
    while parts.iter().any(|p| p.len() > 1) {
        let folded = runner.batch(|b| {
            parts
                .iter()
                .map(|p| match p.as_slice() {
                    [x, y, ..] => op(b, x, y).map(Some),
                    _ => Ok(None),
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        for (p, f) in parts.iter_mut().zip(folded) {
            if let Some(r) = f {
                p.drain(..2);
                p.insert(0, r);
            }
        }
    }
    Ok(parts.into_iter().map(|mut p| p.remove(0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghd::{fixture_ghd, GhdFamily};

    #[test]
    fn star_groups_odd_leaf_into_last_pair() {
        let (_, d) = fixture_ghd(GhdFamily::Star(4)).unwrap();
        let w = Working::new(&d);
        let steps = w.plan();
        assert_eq!(steps.len(), 1);
        assert!(matches!(&steps[0], Step::Group { members, .. } if members.len() == 3));
    }

    #[test]
    fn potential_of_star_and_chain() {
        let (_, star) = fixture_ghd(GhdFamily::Star(9)).unwrap();
        assert_eq!(Working::new(&star).potential(), Some(16));
        let (_, chain) = fixture_ghd(GhdFamily::Chain(5)).unwrap();
        assert_eq!(Working::new(&chain).potential(), Some(16));
    }
}
