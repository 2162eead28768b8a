mod common;

use apst::harness::{oracle_matches, sort_matches};
use apst::learner_apst::{ApstConfig, ApstState, InsertPolicy};
use apst::sequences::{split, Symbol};
use apst::suffix_tree::hamming;
use apst::{Alphabet, Dataset, WeightParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn traversal_equals_oracle(
        seed in any::<u64>(),
        k in prop_oneof![Just(2usize), Just(3), Just(5)],
        t in 1usize..14,
        eps in 0usize..4,
        cap in proptest::option::of(0usize..10),
    ) {
        let mut rng = common::rng(seed);
        let tree = common::random_tree(&mut rng, k, 64, 10);
        let history = common::random_symbols(&mut rng, t - 1, k);
        let mut fast = tree.collect_matches(&history, eps, cap);
        sort_matches(&tree, &mut fast);
        let slow = oracle_matches(&tree, &history, eps, cap).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn matches_are_within_budget(seed in any::<u64>(), eps in 0usize..3) {
        let mut rng = common::rng(seed);
        let tree = common::random_tree(&mut rng, 2, 48, 8);
        let history = common::random_symbols(&mut rng, 10, 2);
        for m in tree.collect_matches(&history, eps, None) {
            let s = tree.spelled(m.node);
            prop_assert_eq!(s.len(), m.len);
            prop_assert_eq!(hamming(&s, &history[history.len() - m.len..]), m.distance);
            prop_assert!(m.distance <= eps);
        }
    }

    #[test]
    fn learning_keeps_tree_suffix_closed(
        seed in any::<u64>(),
        full in any::<bool>(),
        self_bounded in any::<bool>(),
    ) {
        let mut rng = common::rng(seed);
        let output = common::random_symbols(&mut rng, 30, 2);
        let ds = Dataset::new(Alphabet::binary(), output, None, None).unwrap();
        let params = WeightParams::new(2.0, 0.7, 1).unwrap();
        let base = if self_bounded { ApstConfig::self_bounded(params) } else { ApstConfig::unbounded(params) };
        let policy = if full { InsertPolicy::FullNeighborhood } else { InsertPolicy::ExactOnly };
        let mut st = ApstState::new(base.with_insert_policy(policy), Alphabet::binary(), 0).unwrap();
        st.run(&ds).unwrap();
        prop_assert!(st.hyp.tree.is_suffix_closed());
    }

    #[test]
    fn split_segments_tile_the_stream(
        len in 3usize..2000,
        raw in proptest::collection::vec(1u32..100, 1..5),
    ) {
        let total: u32 = raw.iter().sum();
        let fractions: Vec<f64> = raw.iter().map(|&r| r as f64 / total as f64).collect();
        if let Ok(segs) = split(len, &fractions) {
            prop_assert_eq!(segs[0].start, 0);
            prop_assert_eq!(segs.last().unwrap().end, len);
            for w in segs.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            prop_assert!(segs.iter().all(|s| !s.is_empty()));
        }
    }

    #[test]
    fn history_is_continuous_across_segments(seed in any::<u64>(), len in 10usize..200) {
        let mut rng = common::rng(seed);
        let output: Vec<Symbol> = common::random_symbols(&mut rng, len, 5);
        let ds = Dataset::new(Alphabet::new(5).unwrap(), output.clone(), None, None).unwrap();
        let segs = ds.split(&[0.4, 0.2, 0.4]).unwrap();
        let concat: Vec<Symbol> = segs.iter().flat_map(|s| s.symbols(&ds).to_vec()).collect();
        prop_assert_eq!(&concat, &output);
        for seg in &segs {
            let t = seg.rounds().start;
            prop_assert_eq!(ds.history(t), &output[..seg.start]);
        }
    }
}
