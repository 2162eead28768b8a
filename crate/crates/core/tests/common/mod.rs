#![allow(dead_code)]

use apst::sequences::Symbol;
use apst::{Alphabet, ApproxSuffixTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symbols(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<Symbol> {
    (0..len).map(|_| rng.random_range(0..k as Symbol)).collect()
}

/// Random suffix-closed tree with at most `max_nodes` nodes, built from
/// random strings of length up to `max_len`, with random scores.
pub fn random_tree(rng: &mut ChaCha8Rng, k: usize, max_nodes: usize, max_len: usize) -> ApproxSuffixTree {
    let mut tree = ApproxSuffixTree::new(Alphabet::new(k).unwrap());
    for _ in 0..4 * max_nodes {
        let len = rng.random_range(1..=max_len);
        if tree.node_count() + len > max_nodes {
            continue;
        }
        let s = random_symbols(rng, len, k);
        tree.get_or_insert(&s);
    }
    let ids: Vec<_> = tree.node_ids().collect();
    for id in ids {
        tree.set_score(id, rng.random_range(-1.0..1.0));
    }
    tree
}
