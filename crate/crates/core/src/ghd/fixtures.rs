//! Decompositions of the fixture query families.

use std::collections::BTreeSet;

use super::{Ghd, GhdError, NodeId, NodeSpec};
use crate::fixtures::{fixture_query, Family};
use crate::query::{AtomId, Query};
use crate::relation::Attr;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GhdFamily {
    /// Depth-1 star: the `S` atom at the root, one leaf per `R_i`.
    Star(usize),
    /// Width-1 path rooted at `R1`.
    Chain(usize),
    /// One node per triangle holding its first two atoms; incomplete.
    TriangleChain(usize),
    /// Path over `C_n` whose nodes hold `group` consecutive atoms each.
    ChainGrouped { n: usize, group: usize },
    /// Seven-node width-3 decomposition of `C_16`.
    C16Width3,
}

impl GhdFamily {
    pub fn family(self) -> (Family, usize) {
        match self {
            GhdFamily::Star(n) => (Family::Star, n),
            GhdFamily::Chain(n) | GhdFamily::ChainGrouped { n, .. } => (Family::Chain, n),
            GhdFamily::TriangleChain(n) => (Family::TriangleChain, n),
            GhdFamily::C16Width3 => (Family::Chain, 16),
        }
    }
}

struct Builder<'q> {
    q: &'q Query,
    specs: Vec<NodeSpec>,
}

impl Builder<'_> {
    fn node(&mut self, id: usize, attrs: &[String], atoms: &[usize], children: &[usize]) {
        let chi: BTreeSet<Attr> = attrs
            .iter()
            .map(|a| self.q.attr_by_name(a).expect("fixture attribute exists"))
            .collect();
        self.specs.push(NodeSpec {
            id: NodeId(id),
            chi,
            lambda: atoms.iter().map(|&a| AtomId(a)).collect(),
            children: children.iter().map(|&c| NodeId(c)).collect(),
        });
    }
}

fn names(prefix: &str, range: impl IntoIterator<Item = usize>) -> Vec<String> {
    range.into_iter().map(|i| format!("{prefix}{i}")).collect()
}

/// Query and decomposition for a fixture family.
pub fn fixture_ghd(family: GhdFamily) -> Result<(Query, Ghd), GhdError> {
    let (base, n) = family.family();
    let q = fixture_query(base, n).map_err(|e| GhdError::Fixture(e.to_string()))?;
    let mut b = Builder { q: &q, specs: Vec::new() };
    match family {
        GhdFamily::Star(n) => {
            let leaves: Vec<usize> = (1..n).collect();
            b.node(0, &names("A", 1..n), &[0], &leaves);
            for i in 1..n {
                b.node(i, &[format!("A{i}"), format!("B{i}")], &[i], &[]);
            }
        }
        GhdFamily::Chain(n) => {
            for i in 0..n {
                let next: Vec<usize> = (i + 1 < n).then_some(i + 1).into_iter().collect();
                b.node(i, &names("A", i..=i + 1), &[i], &next);
            }
        }
        GhdFamily::TriangleChain(n) => {
            let k = n / 3;
            for j in 0..k {
                let next: Vec<usize> = (j + 1 < k).then_some(j + 1).into_iter().collect();
                b.node(j, &names("A", 2 * j..=2 * j + 2), &[3 * j, 3 * j + 1], &next);
            }
        }
        GhdFamily::ChainGrouped { n, group } => {
            if group == 0 {
                return Err(GhdError::Fixture("group must be at least 1".into()));
            }
            let k = n.div_ceil(group);
            for j in 0..k {
                let lo = j * group;
                let hi = ((j + 1) * group).min(n);
                let next: Vec<usize> = (j + 1 < k).then_some(j + 1).into_iter().collect();
                let atoms: Vec<usize> = (lo..hi).collect();
                b.node(j, &names("A", lo..=hi), &atoms, &next);
            }
        }
        GhdFamily::C16Width3 => {
            // atom R_i has id i - 1
            let a = |xs: &[usize]| names("A", xs.iter().copied());
            b.node(0, &a(&[8]), &[7], &[1, 4]);
            b.node(1, &a(&[3, 4, 7, 8]), &[3, 7], &[2, 3]);
            b.node(2, &a(&[0, 1, 2, 3]), &[0, 1, 2], &[]);
            b.node(3, &a(&[4, 5, 6, 7]), &[4, 5, 6], &[]);
            b.node(4, &a(&[8, 11, 12, 15, 16]), &[8, 11, 15], &[5, 6]);
            b.node(5, &a(&[8, 9, 10, 11]), &[8, 9, 10], &[]);
            b.node(6, &a(&[12, 13, 14, 15]), &[12, 13, 14], &[]);
        }
    }
    let specs = b.specs;
    let ghd = Ghd::new(NodeId(0), specs)?;
    Ok((q, ghd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghd::{stats, validate_ghd};

    fn check(family: GhdFamily) -> crate::ghd::GhdStats {
        let (q, d) = fixture_ghd(family).unwrap();
        let report = validate_ghd(&q, &d);
        assert!(report.is_valid(), "{family:?}: {report}");
        stats(&q, &d, d.width())
    }

    #[test]
    fn table_one_rows() {
        let s = check(GhdFamily::Star(4));
        assert_eq!((s.w, s.d, s.iw), (1, 1, Some(1)));
        let c = check(GhdFamily::Chain(16));
        assert_eq!((c.w, c.d, c.iw, c.node_count), (1, 15, Some(1), 16));
        let t = check(GhdFamily::TriangleChain(15));
        assert_eq!((t.w, t.d, t.iw, t.node_count), (2, 4, Some(1), 5));
    }

    #[test]
    fn grouped_chain() {
        let s = check(GhdFamily::ChainGrouped { n: 16, group: 3 });
        assert_eq!((s.w, s.node_count, s.iw), (3, 6, Some(1)));
        assert!(s.complete);
        assert!(fixture_ghd(GhdFamily::ChainGrouped { n: 4, group: 0 }).is_err());
    }

    #[test]
    fn c16_width3() {
        let s = check(GhdFamily::C16Width3);
        assert_eq!((s.w, s.node_count, s.d), (3, 7, 2));
        assert!(s.complete);
    }

    #[test]
    fn bad_sizes() {
        assert!(fixture_ghd(GhdFamily::TriangleChain(7)).is_err());
        assert!(fixture_ghd(GhdFamily::Star(1)).is_err());
    }
}
