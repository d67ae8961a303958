use gym_core::fixtures::shape_query;
use gym_core::ghd::{validate_ghd, NodeId};
use gym_core::transform::{c_gta_pass, log_gta, log_gta_checked, select_on_shape, tree_stats, ExtendedGhd, TreeShape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
enum Kind {
    Recursive,
    Stretched,
    Uniform,
    Path,
    Star,
}

fn build(kind: Kind, n: usize, seed: u64) -> TreeShape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Kind::Recursive => TreeShape::random_recursive(n, &mut rng),
        Kind::Stretched => TreeShape::random_stretched(n, 0.8, &mut rng),
        Kind::Uniform => TreeShape::random_uniform(n, &mut rng),
        Kind::Path => TreeShape::path(n),
        Kind::Star => TreeShape::star(n),
    }
}

fn shape(max: usize) -> impl Strategy<Value = TreeShape> {
    let kind = prop_oneof![
        Just(Kind::Recursive),
        Just(Kind::Stretched),
        Just(Kind::Uniform),
        Just(Kind::Path),
        Just(Kind::Star),
    ];
    (kind, 2usize..=max, any::<u64>()).prop_map(|(k, n, seed)| build(k, n, seed))
}

fn log_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn leaves_and_uniques_cover_a_quarter(t in shape(500)) {
        let c = tree_stats(&t);
        prop_assert!(4 * c.leaves + c.uniques >= c.n + 2, "{c:?}");
    }

    #[test]
    fn selection_is_large_and_non_adjacent(t in shape(500)) {
        let r = select_on_shape(&t);
        prop_assert!(r.len() >= t.len().div_ceil(4));
        let leaves = (0..t.len()).filter(|&v| t.children(v).is_empty()).count();
        prop_assert_eq!(r.leaves.len(), leaves);
        for &u in &r.uniques {
            prop_assert!(t.is_unique_c_gc(u.0));
            let c = t.children(u.0)[0];
            prop_assert!(!r.uniques.contains(&NodeId(c)));
        }
    }

    #[test]
    fn log_gta_is_shallow_and_narrow(t in shape(160)) {
        let (q, d) = shape_query(&t);
        let iw = ExtendedGhd::extend(&q, &d).unwrap().iw();
        let out = log_gta_checked(&q, &d).unwrap();
        prop_assert!(validate_ghd(&q, &out.ghd).is_valid());
        prop_assert!(out.ghd.width() <= d.width().max(3 * iw));
        let n = t.len() as f64;
        let bound = log_base(n, 4.0 / 3.0).ceil() as usize + 1;
        prop_assert!(out.rounds.len() <= bound, "{} rounds for {} nodes", out.rounds.len(), t.len());
        prop_assert!(out.ghd.depth() <= bound);
        prop_assert_eq!(&out.heights, &out.ghd.heights());
    }

    #[test]
    fn merge_pass_shrinks_and_at_most_doubles_width(t in shape(300)) {
        let (q, d) = shape_query(&t);
        let merged = c_gta_pass(&q, &d).unwrap();
        prop_assert!(validate_ghd(&q, &merged).is_valid());
        prop_assert!(merged.len() <= 15 * d.len() / 16, "{} -> {}", d.len(), merged.len());
        prop_assert!(merged.width() <= 2 * d.width());
    }
}

#[test]
fn large_trees_stay_within_the_round_bound() {
    for (i, kind) in [Kind::Recursive, Kind::Stretched, Kind::Uniform, Kind::Path].into_iter().enumerate() {
        let t = build(kind, 512, i as u64);
        let (q, d) = shape_query(&t);
        let out = log_gta(&q, &d).unwrap();
        let bound = log_base(512.0, 4.0 / 3.0).ceil() as usize + 1;
        assert!(out.rounds.len() <= bound, "{kind:?}: {}", out.rounds.len());
        assert!(out.ghd.width() <= 3);
        assert!(validate_ghd(&q, &out.ghd).is_valid());
    }
}
