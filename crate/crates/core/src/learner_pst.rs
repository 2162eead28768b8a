//! Classical exact-matching prediction suffix tree with margin updates.
//!
//! Prediction sums the scores of every history suffix present in the tree,
//! weighted by `2^{-i/2}`, plus `w . x`. After a round with positive hinge
//! loss every suffix of the history is reinforced (and inserted when
//! missing) with step `tau = loss / (|x|^2 + 2 + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner_apst::RoundRecord;
use crate::sequences::{sign_of, Alphabet, Symbol};
use crate::suffix_tree::{ApproxSuffixTree, NodeId};
use crate::weighting::geometric_weight;

/// Weight vector plus scored suffix tree. Starts at `w = 0` and an empty
/// tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstHypothesis {
    pub w: Vec<f64>,
    pub tree: ApproxSuffixTree,
}

impl PstHypothesis {
    pub fn new(alphabet: Alphabet, input_dim: usize) -> Self {
        Self {
            w: vec![0.0; input_dim],
            tree: ApproxSuffixTree::new(alphabet),
        }
    }

    pub fn linear_part(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                weights: self.w.len(),
                input: x.len(),
            });
        }
        Ok(dot(&self.w, x))
    }

    pub(crate) fn step_weights(&mut self, x: &[f64], scale: f64) {
        for (w, v) in self.w.iter_mut().zip(x) {
            *w += scale * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.w, &self.w) + self.tree.score_norm_sq()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Margin `h` and predicted sign; `sign(0) = +1`.
pub fn pst_predict(hyp: &PstHypothesis, x: &[f64], history: &[Symbol]) -> Result<(f64, f64)> {
    let mut h = hyp.linear_part(x)?;
    let mut node = NodeId::ROOT;
    for i in 1..=history.len() {
        // suffix closure: once a suffix is missing, every longer one is too
        let Some(next) = hyp.tree.child(node, history[history.len() - i]) else {
            break;
        };
        h += geometric_weight(i) * hyp.tree.score(next);
        node = next;
    }
    Ok((h, if h >= 0.0 { 1.0 } else { -1.0 }))
}

/// Applies the hinge-loss update for round `t = history.len() + 1`.
pub fn pst_update(
    hyp: &mut PstHypothesis,
    x: &[f64],
    y: Symbol,
    h: f64,
    history: &[Symbol],
) -> RoundRecord {
    let y_sign = sign_of(y);
    let loss = (1.0 - y_sign * h).max(0.0);
    let mut tau = 0.0;
    if loss > 0.0 {
        tau = loss / (dot(x, x) + 2.0 + 1.0);
        hyp.step_weights(x, y_sign * tau);
        let mut node = NodeId::ROOT;
        for i in 1..=history.len() {
            let (next, _) = hyp.tree.get_or_insert_child(node, history[history.len() - i]);
            hyp.tree.add_score(next, y_sign * tau * geometric_weight(i));
            node = next;
        }
    }
    RoundRecord {
        t: history.len() + 1,
        h,
        y_hat: if h >= 0.0 { 1 } else { -1 },
        y: y_sign as i64,
        loss,
        tau,
        updated: loss > 0.0,
        d_after: hyp.tree.max_depth(),
        p_after: 0.0,
        l_after: 0.0,
        matches_count: 0,
        sum_omega_sq: 0.0,
        scores: None,
    }
}

/// Online driver for the baseline learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstLearner {
    pub hyp: PstHypothesis,
}

impl PstLearner {
    pub fn new(alphabet: Alphabet, input_dim: usize) -> Self {
        Self {
            hyp: PstHypothesis::new(alphabet, input_dim),
        }
    }

    pub fn step(&mut self, x: &[f64], history: &[Symbol], y: Symbol) -> Result<RoundRecord> {
        let (h, _) = pst_predict(&self.hyp, x, history)?;
        let mut rec = pst_update(&mut self.hyp, x, y, h, history);
        let (count, mass) = exact_match_mass(&self.hyp.tree, history, rec.updated);
        rec.matches_count = count;
        rec.sum_omega_sq = mass;
        Ok(rec)
    }
}

/// Number of exact suffix matches and their squared weight mass. After an
/// update every suffix is present, otherwise walk the tree.
fn exact_match_mass(tree: &ApproxSuffixTree, history: &[Symbol], all_present: bool) -> (usize, f64) {
    let mut node = NodeId::ROOT;
    let mut count = 0;
    let mut mass = 0.0;
    for i in 1..=history.len() {
        if !all_present {
            match tree.child(node, history[history.len() - i]) {
                Some(next) => node = next,
                None => break,
            }
        }
        count += 1;
        mass += geometric_weight(i) * geometric_weight(i);
    }
    (count, mass)
}
