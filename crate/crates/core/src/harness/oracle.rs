//! Brute-force references for the pruned traversal and the weight mass.
//! Nothing here shares code with the traversal or the log-space weights.

use crate::error::{Error, Result};
use crate::sequences::Symbol;
use crate::suffix_tree::{hamming, ApproxSuffixTree, Match};
use crate::weighting::WeightParams;

pub const ORACLE_MAX_NODES: usize = 1 << 16;
pub const ORACLE_MAX_HISTORY: usize = 64;
const ENUMERATION_LIMIT: usize = 1 << 22;

/// Every node whose string is within Hamming distance `epsilon` of the
/// equal-length history suffix, found by checking each node on its own.
pub fn oracle_matches(
    tree: &ApproxSuffixTree,
    history: &[Symbol],
    epsilon: usize,
    max_depth: Option<usize>,
) -> Result<Vec<Match>> {
    if tree.node_count() > ORACLE_MAX_NODES || history.len() > ORACLE_MAX_HISTORY {
        return Err(Error::SizeGuard(format!(
            "oracle limited to {ORACLE_MAX_NODES} nodes and history {ORACLE_MAX_HISTORY}, got {} and {}",
            tree.node_count(),
            history.len()
        )));
    }
    let cap = max_depth.unwrap_or(usize::MAX).min(history.len());
    let mut out = Vec::new();
    for id in tree.node_ids() {
        let s = tree.spelled(id);
        let i = s.len();
        if i == 0 || i > cap {
            continue;
        }
        let k = hamming(&s, &history[history.len() - i..]);
        if k <= epsilon {
            out.push(Match {
                len: i,
                distance: k,
                node: id,
            });
        }
    }
    sort_matches(tree, &mut out);
    Ok(out)
}

/// Canonical order: length, distance, then the node's string read from the
/// most recent symbol backwards.
pub fn sort_matches(tree: &ApproxSuffixTree, matches: &mut [Match]) {
    matches.sort_by_cached_key(|m| {
        let mut path = tree.spelled(m.node);
        path.reverse();
        (m.len, m.distance, path)
    });
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `omega(i, k)^2 = (1 - xi)^k lambda^i e^{-lambda} / i!` by plain products.
fn omega_sq_direct(i: usize, k: usize, p: &WeightParams) -> f64 {
    let mut poisson = (-p.lambda).exp();
    for j in 1..=i {
        poisson *= p.lambda / j as f64;
    }
    (1.0 - p.xi).powi(k as i32) * poisson
}

/// Squared weight mass when every string of length `1..=max_len` within the
/// Hamming budget is a tree node:
/// `sum_i sum_{k <= eps} C(i, k) (K - 1)^k omega(i, k)^2`.
pub fn closed_form_sum_omega_sq(p: &WeightParams, max_len: usize, alphabet_size: usize) -> f64 {
    let m = (alphabet_size - 1) as f64;
    let mut total = 0.0;
    for i in 1..=max_len {
        for k in 0..=p.epsilon.min(i) {
            total += binomial(i, k) * m.powi(k as i32) * omega_sq_direct(i, k, p);
        }
    }
    total
}

/// Squared weight mass of a complete `K`-ary tree of depth `depth` seen from
/// a history of length `t - 1`, by enumerating every string of every length
/// and measuring its distance to the history suffix.
pub fn oracle_sum_omega_sq(
    history: &[Symbol],
    depth: usize,
    alphabet_size: usize,
    p: &WeightParams,
) -> Result<f64> {
    let cap = depth.min(history.len());
    let strings = (alphabet_size as f64).powi(cap as i32);
    if strings > ENUMERATION_LIMIT as f64 {
        return Err(Error::SizeGuard(format!(
            "{strings} strings exceed the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    let mut total = 0.0;
    for i in 1..=cap {
        let suffix = &history[history.len() - i..];
        let mut s = vec![0 as Symbol; i];
        loop {
            let k = hamming(&s, suffix);
            if k <= p.epsilon {
                total += omega_sq_direct(i, k, p);
            }
            // odometer increment
            let mut pos = 0;
            while pos < i {
                s[pos] += 1;
                if (s[pos] as usize) < alphabet_size {
                    break;
                }
                s[pos] = 0;
                pos += 1;
            }
            if pos == i {
                break;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::Alphabet;
    use crate::suffix_tree::fixtures::{sample_tree, MINUS, PLUS};
    use crate::weighting::{omega_sq, WeightParams};

    #[test]
    fn sample_oracle_agrees_with_traversal() {
        let tree = sample_tree();
        let history = [MINUS, MINUS, PLUS, PLUS];
        for eps in 0..=3 {
            let mut fast = tree.collect_matches(&history, eps, None);
            sort_matches(&tree, &mut fast);
            assert_eq!(fast, oracle_matches(&tree, &history, eps, None).unwrap(), "eps {eps}");
        }
    }

    #[test]
    fn complete_binary_depth8_closed_form() {
        let p = WeightParams::new(3.0, 0.7, 1).unwrap();
        let history: Vec<Symbol> = (0..9).map(|j| (j % 3 == 0) as Symbol).collect();
        let enumerated = oracle_sum_omega_sq(&history, 8, 2, &p).unwrap();
        let by_terms: f64 = (1..=8).map(|i| omega_sq(i, 0, &p) + i as f64 * omega_sq(i, 1, &p)).sum();
        assert!((enumerated - by_terms).abs() < 1e-14, "{enumerated} {by_terms}");
        assert!((closed_form_sum_omega_sq(&p, 8, 2) - enumerated).abs() < 1e-14);
    }

    #[test]
    fn complete_tree_matches_oracle_on_real_tree() {
        let p = WeightParams::new(2.0, 0.5, 2).unwrap();
        let alphabet = Alphabet::new(3).unwrap();
        let mut tree = ApproxSuffixTree::new(alphabet);
        let mut s = vec![0 as Symbol; 4];
        for _ in 0..81 {
            tree.get_or_insert(&s);
            let mut pos = 0;
            while pos < 4 {
                s[pos] += 1;
                if s[pos] < 3 {
                    break;
                }
                s[pos] = 0;
                pos += 1;
            }
        }
        let history = [2, 0, 1, 1, 2];
        let mass: f64 = tree
            .collect_matches(&history, 2, None)
            .iter()
            .map(|m| omega_sq(m.len, m.distance, &p))
            .sum();
        let enumerated = oracle_sum_omega_sq(&history, 4, 3, &p).unwrap();
        assert!((mass - enumerated).abs() < 1e-14);
        assert!((closed_form_sum_omega_sq(&p, 4, 3) - enumerated).abs() < 1e-14);
    }

    #[test]
    fn size_guard_trips() {
        let tree = sample_tree();
        assert!(matches!(
            oracle_matches(&tree, &[0; 65], 1, None),
            Err(Error::SizeGuard(_))
        ));
        let p = WeightParams::new(2.0, 0.5, 1).unwrap();
        assert!(oracle_sum_omega_sq(&[0; 40], 40, 2, &p).is_err());
    }
}
