use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{atoms_cover, Ghd, NodeId};
use crate::query::{AtomId, Query};
use crate::relation::Attr;

/// One broken GHD property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `lambda` names an atom the query does not have.
    UnknownAtom { node: NodeId, atom: AtomId },
    /// `chi` names an attribute the query does not have.
    UnknownAttribute { node: NodeId, attr: Attr },
    /// No node's `chi` contains all attributes of the atom.
    UncoveredAtom { atom: AtomId },
    /// The nodes whose `chi` holds the attribute do not form a subtree.
    DisconnectedAttribute { attr: Attr },
    /// Attributes of `chi` that no atom of `lambda` provides.
    ChiNotCovered { node: NodeId, attrs: Vec<Attr> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownAtom { node, atom } => {
                write!(f, "node {node}: unknown atom {atom}")
            }
            Violation::UnknownAttribute { node, attr } => {
                write!(f, "node {node}: unknown attribute {attr}")
            }
            Violation::UncoveredAtom { atom } => {
                write!(f, "atom {atom} is not contained in any node")
            }
            Violation::DisconnectedAttribute { attr } => {
                write!(f, "nodes holding attribute {attr} are not connected")
            }
            Violation::ChiNotCovered { node, attrs } => {
                write!(f, "node {node}: attributes {attrs:?} not covered by lambda")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks coverage, attribute connectivity and `chi ⊆ ∪lambda`.
pub fn validate_ghd(q: &Query, d: &Ghd) -> ValidationReport {
    let mut violations = Vec::new();
    let attr_count = q.attr_count() as u32;

    for n in d.nodes() {
        for &a in &n.lambda {
            if q.atom(a).is_none() {
                violations.push(Violation::UnknownAtom { node: n.id, atom: a });
            }
        }
        for &v in &n.chi {
            if v.0 >= attr_count {
                violations.push(Violation::UnknownAttribute { node: n.id, attr: v });
            }
        }
    }

    for atom in q.atoms() {
        let attrs = atom.attr_set();
        if !d.nodes().any(|n| attrs.is_subset(&n.chi)) {
            violations.push(Violation::UncoveredAtom { atom: atom.id });
        }
    }

    // Nodes holding v form a subtree iff they span exactly (count - 1) tree
    // edges with both endpoints holding v.
    let mut holders: BTreeMap<Attr, usize> = BTreeMap::new();
    for n in d.nodes() {
        for &v in &n.chi {
            *holders.entry(v).or_default() += 1;
        }
    }
    let mut inner_edges: BTreeMap<Attr, usize> = BTreeMap::new();
    for (p, c) in d.edges() {
        for &v in d.chi(p).intersection(d.chi(c)) {
            *inner_edges.entry(v).or_default() += 1;
        }
    }
    for (&v, &count) in &holders {
        if inner_edges.get(&v).copied().unwrap_or(0) + 1 != count {
            violations.push(Violation::DisconnectedAttribute { attr: v });
        }
    }

    for n in d.nodes() {
        let cover = atoms_cover(q, &n.lambda);
        let missing: Vec<Attr> = n.chi.difference(&cover).copied().collect();
        if !missing.is_empty() {
            violations.push(Violation::ChiNotCovered {
                node: n.id,
                attrs: missing,
            });
        }
    }

    ValidationReport { violations }
}

/// Atoms contained in exactly one node's `chi`, keyed by that node.
pub(crate) fn unique_covers(q: &Query, chis: &BTreeMap<NodeId, &BTreeSet<Attr>>) -> BTreeSet<NodeId> {
    let mut owners = BTreeSet::new();
    for atom in q.atoms() {
        let attrs = atom.attr_set();
        let mut holders = chis.iter().filter(|(_, chi)| attrs.is_subset(chi));
        if let (Some((&id, _)), None) = (holders.next(), holders.next()) {
            owners.insert(id);
        }
    }
    owners
}
