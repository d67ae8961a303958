use std::collections::BTreeSet;

use gym_core::bsp::{cost_bound, mr_dedup, mr_intersect, mr_join, mr_semijoin, CostLedger, MachineConfig};
use gym_core::relation::{serial_join, Attr, Multiset, Relation, Row};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_relation(schema: &[u32], size: usize, domain: i64, rng: &mut ChaCha8Rng) -> Relation {
    let mut rows: BTreeSet<Row> = BTreeSet::new();
    while rows.len() < size {
        rows.insert((0..schema.len()).map(|_| rng.gen_range(0..domain)).collect());
    }
    Relation::new("r", schema.iter().map(|&a| Attr(a)).collect(), rows).unwrap()
}

fn small(schema: &'static [u32]) -> impl Strategy<Value = Relation> {
    (0usize..=40, 2i64..=8, any::<u64>()).prop_map(move |(n, dom, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = (dom as usize).pow(schema.len() as u32);
        random_relation(schema, n.min(cap), dom, &mut rng)
    })
}

fn config() -> impl Strategy<Value = MachineConfig> {
    (4usize..=64, any::<u64>()).prop_map(|(m, seed)| MachineConfig::new(m, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn join_matches_serial(a in small(&[0, 1]), b in small(&[1, 2]), c in small(&[2, 3]), cfg in config()) {
        let mut ledger = CostLedger::new();
        let rs = [a, b, c];
        match mr_join(&rs, &cfg, &mut ledger) {
            Ok(out) => {
                prop_assert!(out.same_contents(&serial_join(&rs)));
                prop_assert!(ledger.max_load() <= cfg.memory as u64);
            }
            Err(_) => prop_assert!(ledger.aborted),
        }
    }

    #[test]
    fn semijoin_matches_serial(s in small(&[0, 1]), r in small(&[1, 2]), cfg in config()) {
        let mut ledger = CostLedger::new();
        let out = mr_semijoin(&s, &r, &cfg, &mut ledger).unwrap();
        prop_assert!(out.same_contents(&s.semijoin(&r)));
        prop_assert!(ledger.max_load() <= cfg.memory as u64);
    }

    #[test]
    fn intersect_matches_serial(a in small(&[0, 1]), b in small(&[0, 1]), cfg in config()) {
        let mut ledger = CostLedger::new();
        if let Ok(out) = mr_intersect(&a, &b, &cfg, &mut ledger) {
            prop_assert!(out.same_contents(&a.intersect(&b).unwrap()));
            prop_assert!(ledger.max_load() <= cfg.memory as u64);
            prop_assert_eq!(ledger.rounds, 1);
        }
    }

    #[test]
    fn dedup_matches_the_set(rows in prop::collection::vec(prop::collection::vec(0i64..5, 2), 0..80), k in 1usize..=4, cfg in config()) {
        // each distinct row repeated at most k times
        let distinct: BTreeSet<Row> = rows.iter().cloned().collect();
        let mut bag = Vec::new();
        for (i, r) in distinct.iter().enumerate() {
            for _ in 0..=(i % k) {
                bag.push(r.clone());
            }
        }
        let m = Multiset::new(vec![Attr(0), Attr(1)], bag, k).unwrap();
        let mut ledger = CostLedger::new();
        let out = mr_dedup(&m, &cfg, &mut ledger).unwrap();
        prop_assert_eq!(out.rows(), &distinct);
        prop_assert!(ledger.max_load() <= cfg.memory as u64);
    }

    #[test]
    fn parallel_lanes_add_communication(a in prop::collection::vec((0usize..50, 0usize..50), 0..5), b in prop::collection::vec((0usize..50, 0usize..50), 0..5)) {
        let lane = |rounds: &[(usize, usize)]| {
            let mut l = CostLedger::new();
            for &(i, o) in rounds {
                l.record(i, o, 1, i);
            }
            l
        };
        let (la, lb) = (lane(&a), lane(&b));
        let mut merged = CostLedger::new();
        merged.absorb_parallel(vec![la.clone(), lb.clone()]);
        prop_assert_eq!(merged.rounds, a.len().max(b.len()));
        prop_assert_eq!(merged.communicated, la.communicated + lb.communicated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn join_cost_within_twice_the_bound(z in 2usize..=3, seed in any::<u64>()) {
        let m = 48usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs: Vec<Relation> = (0..z as u32)
            .map(|i| {
                let size = rng.gen_range(m / z..=2 * m);
                random_relation(&[i, i + 1], size, 4 * m as i64, &mut rng)
            })
            .collect();
        let cfg = MachineConfig::new(m, seed).unwrap();
        let mut ledger = CostLedger::new();
        let out = mr_join(&rs, &cfg, &mut ledger).unwrap();
        let total: f64 = rs.iter().map(|r| r.len() as f64).sum();
        let zf = z as f64;
        let bound = zf.powf(zf) * total.powf(zf) / (m as f64).powf(zf - 1.0) + out.len() as f64;
        prop_assert!((ledger.communicated as f64) <= 2.0 * bound);
        prop_assert!(ledger.max_load() <= m as u64);
    }

    #[test]
    fn semijoin_cost_within_four_times_the_bound(seed in any::<u64>()) {
        let m = 256usize;
        let top = (m as f64).powf(1.25) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_relation(&[0, 1], rng.gen_range(m..=top), 2 * top as i64, &mut rng);
        let r = random_relation(&[1, 2], rng.gen_range(m..=top), 2 * top as i64, &mut rng);
        let cfg = MachineConfig::new(m, seed).unwrap().with_epsilon(1.25).unwrap();
        let mut ledger = CostLedger::new();
        mr_semijoin(&s, &r, &cfg, &mut ledger).unwrap();
        let b = cost_bound((s.len() + r.len()) as f64, m as f64);
        prop_assert!((ledger.communicated as f64) <= 4.0 * b, "{} vs {}", ledger.communicated, b);
        prop_assert!(ledger.max_load() <= m as u64);
    }
}
