//! K-symbol prediction with one approximate suffix tree per class.
//!
//! The decision is the argmax of the per-class margins (ties go to the
//! smallest symbol). A mistake costs `max_{k != y} (h_k + 1 - h_y)`; the true
//! class tree is pushed up and the predicted class tree pushed down by the
//! same step `tau = loss / (|x|^2 + 2 + c * gamma)` with `c = 2` by default,
//! since two match sets are touched per round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner_apst::{ApstConfig, ApstState, RoundRecord};
use crate::learner_pst::dot;
use crate::sequences::{Alphabet, Dataset, Symbol};

#[derive(Debug, Clone)]
pub struct McPrediction {
    pub scores: Vec<f64>,
    pub y_hat: Symbol,
    /// Squared weight mass of each class's match set.
    pub masses: Vec<f64>,
    pub matches_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassState {
    pub alphabet: Alphabet,
    pub config: ApstConfig,
    /// Multiplier `c` on gamma in the step-size denominator.
    pub tau_gamma_factor: f64,
    pub classes: Vec<ApstState>,
}

impl MulticlassState {
    pub fn new(config: ApstConfig, alphabet: Alphabet, input_dim: usize) -> Result<Self> {
        let classes = (0..alphabet.size())
            .map(|_| ApstState::new(config, alphabet, input_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            alphabet,
            config,
            tau_gamma_factor: 2.0,
            classes,
        })
    }

    pub fn with_tau_gamma_factor(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!("tau gamma factor must be > 0, got {factor}")));
        }
        self.tau_gamma_factor = factor;
        Ok(self)
    }

    pub fn predict(&self, x: &[f64], history: &[Symbol]) -> Result<McPrediction> {
        let mut scores = Vec::with_capacity(self.classes.len());
        let mut masses = Vec::with_capacity(self.classes.len());
        let mut matches_count = 0;
        for class in &self.classes {
            let p = class.predict(x, history)?;
            debug_assert!(
                p.sum_omega_sq <= self.config.mass_cap(self.alphabet.size()) + 1e-9,
                "class weight mass {} exceeds cap",
                p.sum_omega_sq
            );
            scores.push(p.h);
            masses.push(p.sum_omega_sq);
            matches_count += p.matches.len();
        }
        let y_hat = argmax(&scores);
        Ok(McPrediction {
            scores,
            y_hat,
            masses,
            matches_count,
        })
    }

    pub fn update(
        &mut self,
        x: &[f64],
        y: Symbol,
        pred: &McPrediction,
        history: &[Symbol],
    ) -> Result<RoundRecord> {
        if !self.alphabet.contains(y) {
            return Err(Error::SymbolOutOfAlphabet {
                symbol: y as i64,
                position: history.len() + 1,
                alphabet_size: self.alphabet.size(),
            });
        }
        let (mut loss, mut tau) = (0.0, 0.0);
        let updated = pred.y_hat != y;
        if updated {
            let hy = pred.scores[y as usize];
            loss = pred
                .scores
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != y as usize)
                .map(|(_, &hk)| hk + 1.0 - hy)
                .fold(f64::NEG_INFINITY, f64::max);
            let gamma = self.classes[0].gamma;
            tau = loss / (dot(x, x) + 2.0 + self.tau_gamma_factor * gamma);
            self.classes[y as usize].learn(x, history, 1.0, tau, loss);
            self.classes[pred.y_hat as usize].learn(x, history, -1.0, tau, loss);
        }
        let truth = &self.classes[y as usize];
        Ok(RoundRecord {
            t: history.len() + 1,
            h: pred.scores[pred.y_hat as usize],
            y_hat: pred.y_hat as i64,
            y: y as i64,
            loss,
            tau,
            updated,
            d_after: self.max_depth(),
            p_after: truth.p_acc,
            l_after: truth.l_acc,
            matches_count: pred.matches_count,
            sum_omega_sq: pred.masses.iter().copied().fold(0.0, f64::max),
            scores: Some(pred.scores.clone()),
        })
    }

    pub fn step(&mut self, x: &[f64], history: &[Symbol], y: Symbol) -> Result<RoundRecord> {
        let pred = self.predict(x, history)?;
        self.update(x, y, &pred, history)
    }

    pub fn run(&mut self, ds: &Dataset) -> Result<Vec<RoundRecord>> {
        (1..=ds.len())
            .map(|t| self.step(ds.x(t), ds.history(t), ds.output[t - 1]))
            .collect()
    }

    pub fn class_depths(&self) -> Vec<usize> {
        self.classes.iter().map(ApstState::reported_depth).collect()
    }

    /// Largest per-class depth.
    pub fn max_depth(&self) -> usize {
        self.class_depths().into_iter().max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        self.classes.iter().map(|c| c.hyp.tree.node_count()).sum()
    }
}

/// Index of the largest score; the smallest index wins ties.
pub fn argmax(scores: &[f64]) -> Symbol {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best as Symbol
}
