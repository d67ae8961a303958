use std::collections::{BTreeMap, BTreeSet, VecDeque};

use gym_core::fixtures::{random_acyclic, shape_query};
use gym_core::ghd::{
    complete_and_minimize, fixture_ghd, stats, validate_ghd, Ghd, GhdFamily, NodeId, NodeSpec, Violation,
};
use gym_core::query::Query;
use gym_core::relation::Attr;
use gym_core::transform::TreeShape;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Attribute connectivity checked from scratch: for each attribute, a
/// breadth-first search over the undirected tree restricted to holders must
/// reach every holder.
fn connected_attrs(d: &Ghd) -> bool {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = d.node_ids().map(|v| (v, Vec::new())).collect();
    for (p, c) in d.edges() {
        adj.get_mut(&p).unwrap().push(c);
        adj.get_mut(&c).unwrap().push(p);
    }
    let attrs: BTreeSet<Attr> = d.nodes().flat_map(|n| n.chi.iter().copied()).collect();
    attrs.into_iter().all(|a| {
        let holders: BTreeSet<NodeId> = d.nodes().filter(|n| n.chi.contains(&a)).map(|n| n.id).collect();
        let start = *holders.iter().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[&v] {
                if holders.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen == holders
    })
}

fn has_disconnected(q: &Query, d: &Ghd) -> bool {
    validate_ghd(q, d)
        .violations
        .iter()
        .any(|v| matches!(v, Violation::DisconnectedAttribute { .. }))
}

/// `d` with the labels of nodes `a` and `b` exchanged.
fn swap_labels(d: &Ghd, a: NodeId, b: NodeId) -> Ghd {
    let specs: Vec<NodeSpec> = d.specs();
    let label = |id: NodeId| specs.iter().find(|s| s.id == id).map(|s| (s.chi.clone(), s.lambda.clone())).unwrap();
    let (la, lb) = (label(a), label(b));
    let specs = specs
        .into_iter()
        .map(|mut s| {
            if s.id == a {
                (s.chi, s.lambda) = lb.clone();
            } else if s.id == b {
                (s.chi, s.lambda) = la.clone();
            }
            s
        })
        .collect();
    Ghd::new(d.root(), specs).unwrap()
}

/// Node labels as a sorted multiset, ignoring node ids.
fn labels(d: &Ghd) -> Vec<(BTreeSet<Attr>, Vec<usize>)> {
    let mut out: Vec<_> = d.nodes().map(|n| (n.chi.clone(), n.lambda.iter().map(|a| a.0).collect())).collect();
    out.sort();
    out
}

fn random_join_tree() -> impl Strategy<Value = (Query, Ghd)> {
    (1usize..=24, any::<u64>()).prop_map(|(n, seed)| random_acyclic(n, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn rerooting_keeps_validity_and_width((q, d) in random_join_tree(), pick in any::<prop::sample::Index>()) {
        let ids: Vec<NodeId> = d.node_ids().collect();
        let v = ids[pick.index(ids.len())];
        let r = d.root_at(v).unwrap();
        prop_assert_eq!(r.root(), v);
        prop_assert_eq!(r.len(), d.len());
        prop_assert!(validate_ghd(&q, &r).is_valid());
        prop_assert_eq!(r.width(), d.width());
        let undirected = |g: &Ghd| -> BTreeSet<(NodeId, NodeId)> {
            g.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
        };
        prop_assert_eq!(undirected(&r), undirected(&d));
    }

    #[test]
    fn json_round_trips((q, d) in random_join_tree()) {
        let text = d.to_json(&q);
        prop_assert_eq!(Ghd::from_json(&q, &text).unwrap(), d);
    }

    #[test]
    fn validator_agrees_with_independent_connectivity_check(n in 3usize..=20, seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, d) = shape_query(&TreeShape::random_recursive(n, &mut rng));
        let (a, b) = (NodeId(a.index(n)), NodeId(b.index(n)));
        let swapped = swap_labels(&d, a, b);
        prop_assert_eq!(has_disconnected(&q, &swapped), !connected_attrs(&swapped));
    }

    #[test]
    fn completion_is_valid_complete_and_stable((q, d) in random_join_tree(), drop in any::<prop::sample::Index>()) {
        // remove one atom from one λ to make the decomposition incomplete
        let mut specs = d.specs();
        let i = drop.index(specs.len());
        let removed = specs[i].lambda.iter().next().copied();
        if let Some(atom) = removed {
            specs[i].lambda.remove(&atom);
            if specs[i].lambda.is_empty() {
                specs[i].chi.clear();
            }
        }
        let broken = Ghd::new(d.root(), specs).unwrap();
        if !validate_ghd(&q, &broken).is_valid() {
            return Ok(());
        }
        let fixed = complete_and_minimize(&q, &broken).unwrap();
        prop_assert!(validate_ghd(&q, &fixed).is_valid());
        prop_assert!(fixed.is_complete(&q));
        prop_assert!(fixed.width() <= broken.width().max(1));
        let again = complete_and_minimize(&q, &fixed).unwrap();
        prop_assert_eq!(labels(&again), labels(&fixed));
        prop_assert_eq!(again.width(), fixed.width());
    }
}

#[test]
fn swapping_chain_ends_breaks_connectivity() {
    let (q, d) = fixture_ghd(GhdFamily::Chain(6)).unwrap();
    let swapped = swap_labels(&d, NodeId(1), NodeId(4));
    assert!(!connected_attrs(&swapped));
    assert!(has_disconnected(&q, &swapped));
    assert!(connected_attrs(&d));
}

#[test]
fn fixture_family_stats() {
    for n in [2, 4, 9, 16] {
        let (q, d) = fixture_ghd(GhdFamily::Star(n)).unwrap();
        let s = stats(&q, &d, 3);
        assert_eq!((s.w, s.d, s.iw), (1, 1, Some(1)), "S_{n}");
    }
    for n in [2, 5, 16, 64] {
        let (q, d) = fixture_ghd(GhdFamily::Chain(n)).unwrap();
        let s = stats(&q, &d, 3);
        assert_eq!((s.w, s.d, s.iw), (1, n - 1, Some(1)), "C_{n}");
    }
    for n in [6, 15, 30] {
        let (q, d) = fixture_ghd(GhdFamily::TriangleChain(n)).unwrap();
        let s = stats(&q, &d, 3);
        assert_eq!((s.w, s.d, s.iw), (2, n / 3 - 1, Some(1)), "TC_{n}");
    }
}

#[test]
fn seven_node_reconstruction() {
    let (q, d) = fixture_ghd(GhdFamily::C16Width3).unwrap();
    let s = stats(&q, &d, 3);
    assert_eq!((s.w, s.node_count, s.complete), (3, 7, true));
    assert!(validate_ghd(&q, &d).is_valid());
}
