mod common;

use apst::learner_apst::{ApstConfig, ApstState, Mode, SuffixWeights};
use apst::learner_pst::{pst_predict, PstLearner};
use apst::multiclass::MulticlassState;
use apst::sequences::{symbol_of_sign, InputStream};
use apst::{Alphabet, Dataset, WeightParams};
use rand::Rng;

fn geometric_config() -> ApstConfig {
    ApstConfig::unbounded(WeightParams::new(3.0, 0.5, 0).unwrap()).with_weights(SuffixWeights::Geometric)
}

fn random_dataset(seed: u64, len: usize, dim: usize) -> Dataset {
    let mut rng = common::rng(seed);
    let output = common::random_symbols(&mut rng, len, 2);
    let rows = (0..len)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    Dataset::new(Alphabet::binary(), output, Some(InputStream::from_rows(rows).unwrap()), None).unwrap()
}

#[test]
fn geometric_apst_is_bit_identical_to_pst() {
    for seed in 0..50 {
        let ds = random_dataset(seed, 60, 2);
        let mut pst = PstLearner::new(Alphabet::binary(), 2);
        let mut apst = ApstState::new(geometric_config(), Alphabet::binary(), 2).unwrap();
        for t in 1..=ds.len() {
            let a = pst.step(ds.x(t), ds.history(t), ds.output[t - 1]).unwrap();
            let b = apst.step(ds.x(t), ds.history(t), ds.output[t - 1]).unwrap();
            assert_eq!(a.h.to_bits(), b.h.to_bits(), "seed {seed} round {t}");
            assert_eq!(a.tau.to_bits(), b.tau.to_bits());
            assert_eq!(pst.hyp, apst.hyp);
        }
    }
}

#[test]
fn binary_multiclass_trees_stay_mirrored() {
    for mode in [Mode::Unbounded, Mode::SelfBounded] {
        for seed in 0..20 {
            let ds = random_dataset(100 + seed, 80, 0);
            let config = ApstConfig::new(WeightParams::new(2.0, 0.7, 1).unwrap(), mode);
            let mut mc = MulticlassState::new(config, Alphabet::binary(), 0).unwrap();
            for t in 1..=ds.len() {
                let rec = mc.step(ds.x(t), ds.history(t), ds.output[t - 1]).unwrap();
                let s = rec.scores.unwrap();
                assert_eq!(s[0], -s[1], "{mode:?} seed {seed} round {t}");
            }
            let (neg, pos) = (&mc.classes[0], &mc.classes[1]);
            assert_eq!(neg.hyp.tree.node_count(), pos.hyp.tree.node_count());
            for id in pos.hyp.tree.node_ids() {
                let other = neg.hyp.tree.find(&pos.hyp.tree.spelled(id)).unwrap();
                assert_eq!(neg.hyp.tree.score(other), -pos.hyp.tree.score(id));
            }
            assert_eq!(neg.depth_bound, pos.depth_bound);
        }
    }
}

#[test]
fn binary_hypothesis_split_into_classes_predicts_the_same() {
    for seed in 0..20 {
        let ds = random_dataset(200 + seed, 120, 0);
        let config = ApstConfig::unbounded(WeightParams::new(4.0, 0.9, 1).unwrap());
        let mut binary = ApstState::new(config, Alphabet::binary(), 0).unwrap();
        let mut mc = MulticlassState::new(config, Alphabet::binary(), 0).unwrap();
        for t in 1..=ds.len() {
            let (x, history) = (ds.x(t), ds.history(t));
            let pb = binary.predict(x, history).unwrap();
            // class +1 holds g/2, class -1 holds -g/2
            let mut pos = binary.hyp.clone();
            let ids: Vec<_> = pos.tree.node_ids().collect();
            for &id in &ids {
                let g = pos.tree.score(id);
                pos.tree.set_score(id, g / 2.0);
            }
            let mut neg = pos.clone();
            for &id in &ids {
                let g = neg.tree.score(id);
                neg.tree.set_score(id, -g);
            }
            mc.classes[1].hyp = pos;
            mc.classes[0].hyp = neg;
            let pm = mc.predict(x, history).unwrap();
            let diff = pm.scores[1] - pm.scores[0];
            assert!((diff - pb.h).abs() <= 1e-12 * pb.h.abs().max(1.0));
            if pb.h != 0.0 {
                assert_eq!(pm.y_hat, symbol_of_sign(pb.y_hat), "seed {seed} round {t}");
            }
            binary.step(x, history, ds.output[t - 1]).unwrap();
        }
    }
}

#[test]
fn pst_prediction_matches_geometric_apst_prediction() {
    let ds = random_dataset(7, 40, 0);
    let mut pst = PstLearner::new(Alphabet::binary(), 0);
    for t in 1..=ds.len() {
        pst.step(ds.x(t), ds.history(t), ds.output[t - 1]).unwrap();
    }
    let mut apst = ApstState::new(geometric_config(), Alphabet::binary(), 0).unwrap();
    apst.hyp = pst.hyp.clone();
    let history = ds.history(ds.len());
    let (h, _) = pst_predict(&pst.hyp, &[], history).unwrap();
    assert_eq!(h.to_bits(), apst.predict(&[], history).unwrap().h.to_bits());
}
