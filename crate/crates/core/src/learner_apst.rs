//! Online learners for the approximate-matching PST.
//!
//! Prediction at round `t` sums `omega(i, k) * g(s)` over every tree node
//! `s` within Hamming distance `epsilon` of a history suffix of length `i`.
//! Both learners take the passive-aggressive step
//! `tau = loss / (|x|^2 + 2 + gamma)` and add `y * tau * omega(i, k)` to each
//! matched node, inserting the exact history suffixes (or, with
//! [`InsertPolicy::FullNeighborhood`], the whole epsilon-ball) when absent.
//!
//! The unbounded learner updates whenever the hinge loss is positive and
//! considers every suffix length. The self-bounded learner only updates when
//! the loss exceeds 1/2 and keeps a depth bound `d_t` that grows just enough
//! to keep the Chernoff tail of the ignored long suffixes paid for:
//!
//! ```text
//! d_t = min { d >= max(ceil(lambda + eps), d_{t-1}) :
//!             gamma_bar * f(d) <= ((sqrt(P^2 + tau*loss) - P) / (2 tau))^2 }
//! P_t = P_{t-1} + 2 tau sqrt(gamma_bar * f(d_t))
//! L_t = L_{t-1} + tau * loss
//! ```
//!
//! which keeps `P_t^2 <= L_t` after every round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner_pst::{dot, PstHypothesis};
use crate::sequences::{sign_of, Alphabet, Dataset, Symbol};
use crate::suffix_tree::{ApproxSuffixTree, Match, NodeId};
use crate::weighting::{self, geometric_weight, WeightParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Unbounded,
    SelfBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InsertPolicy {
    /// Insert only the exact history suffixes; approximate matches are
    /// updated only when already present.
    #[default]
    ExactOnly,
    /// Insert every string within the Hamming budget. Combinatorial; meant
    /// for small alphabets and short streams.
    FullNeighborhood,
}

/// Suffix weighting scheme. `Geometric` is the classical `2^{-i/2}` and is
/// only defined for exact matching (`epsilon = 0`), with `gamma = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SuffixWeights {
    #[default]
    Poisson,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApstConfig {
    pub params: WeightParams,
    pub mode: Mode,
    pub insert_policy: InsertPolicy,
    pub margin_gate: f64,
    #[serde(default)]
    pub weights: SuffixWeights,
}

impl ApstConfig {
    pub fn unbounded(params: WeightParams) -> Self {
        Self {
            params,
            mode: Mode::Unbounded,
            insert_policy: InsertPolicy::ExactOnly,
            margin_gate: 0.0,
            weights: SuffixWeights::Poisson,
        }
    }

    pub fn self_bounded(params: WeightParams) -> Self {
        Self {
            params,
            mode: Mode::SelfBounded,
            insert_policy: InsertPolicy::ExactOnly,
            margin_gate: 0.5,
            weights: SuffixWeights::Poisson,
        }
    }

    pub fn new(params: WeightParams, mode: Mode) -> Self {
        match mode {
            Mode::Unbounded => Self::unbounded(params),
            Mode::SelfBounded => Self::self_bounded(params),
        }
    }

    pub fn with_insert_policy(mut self, policy: InsertPolicy) -> Self {
        self.insert_policy = policy;
        self
    }

    pub fn with_weights(mut self, weights: SuffixWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.mode == Mode::SelfBounded && self.margin_gate != 0.5 {
            return Err(Error::Domain("self-bounded learning requires margin gate 1/2".into()));
        }
        if !(0.0..1.0).contains(&self.margin_gate) {
            return Err(Error::Domain(format!("margin gate {} not in [0, 1)", self.margin_gate)));
        }
        if self.weights == SuffixWeights::Geometric
            && (self.params.epsilon != 0 || self.mode != Mode::Unbounded)
        {
            return Err(Error::Domain(
                "geometric suffix weights need epsilon = 0 and unbounded mode".into(),
            ));
        }
        Ok(())
    }

    /// Cap on the squared weight mass of one match set.
    pub fn gamma(&self) -> f64 {
        match self.weights {
            SuffixWeights::Poisson => weighting::gamma_const(&self.params),
            SuffixWeights::Geometric => 1.0,
        }
    }

    /// Cap on the squared weight mass of a match set in a `K`-ary tree;
    /// equals [`gamma`](Self::gamma) for binary trees.
    pub fn mass_cap(&self, alphabet_size: usize) -> f64 {
        match self.weights {
            SuffixWeights::Poisson => weighting::gamma_const_k(&self.params, alphabet_size),
            SuffixWeights::Geometric => 1.0,
        }
    }

    #[inline]
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        match self.weights {
            SuffixWeights::Poisson => weighting::omega(i, k, &self.params),
            SuffixWeights::Geometric => geometric_weight(i),
        }
    }
}

/// Per-round trace entry. Binary learners report `y` and `y_hat` as `-1/+1`;
/// the multiclass learner reports class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub h: f64,
    pub y_hat: i64,
    pub y: i64,
    pub loss: f64,
    pub tau: f64,
    pub updated: bool,
    pub d_after: usize,
    pub p_after: f64,
    pub l_after: f64,
    pub matches_count: usize,
    pub sum_omega_sq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub h: f64,
    /// `+1.0` or `-1.0`, with `sign(0) = +1`.
    pub y_hat: f64,
    pub matches: Vec<Match>,
    pub sum_omega_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApstState {
    pub config: ApstConfig,
    pub hyp: PstHypothesis,
    /// Current depth bound `d_t`; zero until the first self-bounded update.
    pub depth_bound: usize,
    pub p_acc: f64,
    pub l_acc: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

impl ApstState {
    pub fn new(config: ApstConfig, alphabet: Alphabet, input_dim: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            hyp: PstHypothesis::new(alphabet, input_dim),
            depth_bound: 0,
            p_acc: 0.0,
            l_acc: 0.0,
            gamma: config.gamma(),
            gamma_bar: weighting::gamma_bar(&config.params),
        })
    }

    pub fn tree(&self) -> &ApproxSuffixTree {
        &self.hyp.tree
    }

    fn prediction_cap(&self) -> Option<usize> {
        match self.config.mode {
            Mode::Unbounded => None,
            Mode::SelfBounded => Some(self.depth_bound),
        }
    }

    /// Margin over the matches of the current tree; self-bounded learners
    /// only look `d_{t-1}` symbols back.
    pub fn predict(&self, x: &[f64], history: &[Symbol]) -> Result<Prediction> {
        let matches = self.hyp.tree.collect_matches(
            history,
            self.config.params.epsilon,
            self.prediction_cap(),
        );
        let mut h = self.hyp.linear_part(x)?;
        let mut sum_omega_sq = 0.0;
        for m in &matches {
            let w = self.config.weight(m.len, m.distance);
            h += w * self.hyp.tree.score(m.node);
            sum_omega_sq += w * w;
        }
        Ok(Prediction {
            h,
            y_hat: if h >= 0.0 { 1.0 } else { -1.0 },
            matches,
            sum_omega_sq,
        })
    }

    /// Smallest admissible depth for an update with step `tau` and loss
    /// `ell`, given the current `d_{t-1}` and `P_{t-1}`.
    pub fn grow_depth(&self, tau: f64, ell: f64) -> usize {
        grow_depth(&self.config.params, self.depth_bound, self.p_acc, tau, ell)
    }

    /// Applies one update with externally chosen step. `direction` is `+1`
    /// to raise the margin of this tree on the current history, `-1` to
    /// lower it. Returns the suffix-length cap used.
    pub fn learn(&mut self, x: &[f64], history: &[Symbol], direction: f64, tau: f64, ell: f64) -> usize {
        let cap = match self.config.mode {
            Mode::Unbounded => history.len(),
            Mode::SelfBounded => {
                let d = self.grow_depth(tau, ell);
                self.depth_bound = d;
                self.p_acc += 2.0 * tau * (0.5 * weighting::log_u_lambda(d, &self.config.params)).exp();
                self.l_acc += tau * ell;
                d.min(history.len())
            }
        };
        let scale = direction * tau;
        self.hyp.step_weights(x, scale);
        let eps = self.config.params.epsilon;
        let matches = self.hyp.tree.collect_matches(history, eps, Some(cap));
        for m in &matches {
            let delta = scale * self.config.weight(m.len, m.distance);
            self.hyp.tree.add_score(m.node, delta);
        }
        match self.config.insert_policy {
            InsertPolicy::ExactOnly => {
                let mut node = NodeId::ROOT;
                for i in 1..=cap {
                    let (next, created) =
                        self.hyp.tree.get_or_insert_child(node, history[history.len() - i]);
                    if created {
                        let delta = scale * self.config.weight(i, 0);
                        self.hyp.tree.add_score(next, delta);
                    }
                    node = next;
                }
            }
            InsertPolicy::FullNeighborhood => {
                let k_size = self.hyp.tree.alphabet_size() as Symbol;
                let mut stack = vec![(NodeId::ROOT, 0usize, 0usize)];
                while let Some((node, depth, used)) = stack.pop() {
                    if depth == cap {
                        continue;
                    }
                    let expected = history[history.len() - depth - 1];
                    for sym in 0..k_size {
                        let k = used + usize::from(sym != expected);
                        if k > eps {
                            continue;
                        }
                        let (child, created) = self.hyp.tree.get_or_insert_child(node, sym);
                        if created {
                            let delta = scale * self.config.weight(depth + 1, k);
                            self.hyp.tree.add_score(child, delta);
                        }
                        stack.push((child, depth + 1, k));
                    }
                }
            }
        }
        cap
    }

    /// One binary round: predict, take the loss against `y`, update when the
    /// loss exceeds the margin gate.
    pub fn step(&mut self, x: &[f64], history: &[Symbol], y: Symbol) -> Result<RoundRecord> {
        let pred = self.predict(x, history)?;
        debug_assert!(
            pred.sum_omega_sq <= self.config.mass_cap(self.hyp.tree.alphabet_size()) + 1e-9,
            "weight mass {} exceeds cap",
            pred.sum_omega_sq
        );
        let y_sign = sign_of(y);
        let loss = (1.0 - y_sign * pred.h).max(0.0);
        let mut tau = 0.0;
        let updated = loss > self.config.margin_gate;
        if updated {
            tau = loss / (dot(x, x) + 2.0 + self.gamma);
            self.learn(x, history, y_sign, tau, loss);
        }
        Ok(RoundRecord {
            t: history.len() + 1,
            h: pred.h,
            y_hat: pred.y_hat as i64,
            y: y_sign as i64,
            loss,
            tau,
            updated,
            d_after: self.reported_depth(),
            p_after: self.p_acc,
            l_after: self.l_acc,
            matches_count: pred.matches.len(),
            sum_omega_sq: pred.sum_omega_sq,
            scores: None,
        })
    }

    /// `d_t` for self-bounded learners, the tree depth otherwise.
    pub fn reported_depth(&self) -> usize {
        match self.config.mode {
            Mode::SelfBounded => self.depth_bound,
            Mode::Unbounded => self.hyp.tree.max_depth(),
        }
    }

    /// Runs every round of a binary dataset and returns the trace.
    pub fn run(&mut self, ds: &Dataset) -> Result<Vec<RoundRecord>> {
        (1..=ds.len())
            .map(|t| self.step(ds.x(t), ds.history(t), ds.output[t - 1]))
            .collect()
    }
}

/// Depth-growth rule of the self-bounded learner. Never shrinks `d_prev`
/// and never returns less than `ceil(lambda + epsilon)`.
pub fn grow_depth(params: &WeightParams, d_prev: usize, p_prev: f64, tau: f64, ell: f64) -> usize {
    let mut d = params.min_depth().max(d_prev);
    if !(tau > 0.0 && ell > 0.0) {
        return d;
    }
    // (sqrt(P^2 + tau*ell) - P) / (2 tau) == ell / (2 (sqrt(P^2 + tau*ell) + P))
    let root = ell / (2.0 * ((p_prev * p_prev + tau * ell).sqrt() + p_prev));
    let log_rhs = 2.0 * root.ln();
    let log_gbar = weighting::gamma_bar(params).ln();
    while log_gbar + weighting::log_chernoff_factor(d, params) > log_rhs {
        d += 1;
    }
    d
}

/// Hinge losses of a frozen hypothesis over a binary stream. `depth_cap`
/// limits the suffix lengths it looks at (`None` = all of them).
pub fn replay_losses(
    hyp: &PstHypothesis,
    config: &ApstConfig,
    ds: &Dataset,
    depth_cap: Option<usize>,
) -> Result<Vec<f64>> {
    (1..=ds.len())
        .map(|t| {
            let history = ds.history(t);
            let mut h = hyp.linear_part(ds.x(t))?;
            for m in hyp.tree.collect_matches(history, config.params.epsilon, depth_cap) {
                h += config.weight(m.len, m.distance) * hyp.tree.score(m.node);
            }
            Ok((1.0 - sign_of(ds.output[t - 1]) * h).max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighting::{gamma_bar, omega, u_lambda};

    const M: Symbol = 0;
    const P: Symbol = 1;

    fn params(lambda: f64, xi: f64, eps: usize) -> WeightParams {
        WeightParams::new(lambda, xi, eps).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn empty_tree_margin_is_linear_part() {
        let mut st = ApstState::new(ApstConfig::unbounded(params(2.0, 0.5, 1)), Alphabet::binary(), 2).unwrap();
        st.hyp.w = vec![0.25, -0.5];
        let pred = st.predict(&[0.4, 0.2], &[P, M, P]).unwrap();
        assert_eq!(pred.h, 0.25 * 0.4 + -0.5 * 0.2);
        assert!(pred.matches.is_empty());
    }

    #[test]
    fn eps0_uses_poisson_weights_on_exact_path() {
        let p = params(3.0, 0.5, 0);
        let mut st = ApstState::new(ApstConfig::unbounded(p), Alphabet::binary(), 0).unwrap();
        let a = st.hyp.tree.upsert_path(&[P], true).unwrap();
        let b = st.hyp.tree.upsert_path(&[M, P], true).unwrap();
        st.hyp.tree.set_score(a, 1.5);
        st.hyp.tree.set_score(b, -0.5);
        let h = st.predict(&[], &[P, M, P]).unwrap().h;
        let want = (3f64 * (-3f64).exp()).sqrt() * 1.5 + (9.0 * (-3f64).exp() / 2.0).sqrt() * -0.5;
        assert!(close(h, want, 1e-14));
    }

    #[test]
    fn only_distance_one_matches_contribute() {
        // chain "++", history ending "+-", eps = 1
        let p = params(2.0, 0.5, 1);
        let mut st = ApstState::new(ApstConfig::unbounded(p), Alphabet::binary(), 0).unwrap();
        let pp = st.hyp.tree.upsert_path(&[P, P], true).unwrap();
        let plus = st.hyp.tree.find(&[P]).unwrap();
        st.hyp.tree.set_score(plus, 0.7);
        st.hyp.tree.set_score(pp, -1.3);
        let pred = st.predict(&[], &[M, P, M]).unwrap();
        assert_eq!(pred.matches.len(), 2);
        assert!(pred.matches.iter().all(|m| m.distance == 1));
        let want = omega(1, 1, &p) * 0.7 + omega(2, 1, &p) * -1.3;
        assert!(close(pred.h, want, 1e-14));
    }

    #[test]
    fn zero_loss_round_changes_nothing() {
        let p = params(2.0, 0.5, 1);
        let mut st = ApstState::new(ApstConfig::unbounded(p), Alphabet::binary(), 1).unwrap();
        st.hyp.w = vec![1.0];
        let before = st.clone();
        let rec = st.step(&[1.0], &[P], P).unwrap();
        assert_eq!((rec.loss, rec.tau, rec.updated), (0.0, 0.0, false));
        assert_eq!(st, before);
    }

    #[test]
    fn second_round_update_by_hand() {
        let p = params(2.0, 0.5, 1);
        let mut st = ApstState::new(ApstConfig::unbounded(p), Alphabet::binary(), 0).unwrap();
        assert!(close(st.gamma, 2.5829465452224325, 1e-14));
        let rec = st.step(&[], &[P], P).unwrap();
        assert_eq!(rec.loss, 1.0);
        assert!(close(rec.tau, 0.21820023212849086, 1e-14));
        assert_eq!(st.hyp.tree.node_count(), 1);
        let node = st.hyp.tree.find(&[P]).unwrap();
        assert!(close(st.hyp.tree.score(node), 0.11352087350118507, 1e-14));
    }

    #[test]
    fn each_node_updated_once_per_round() {
        let p = params(2.0, 0.5, 2);
        let cfg = ApstConfig::unbounded(p).with_insert_policy(InsertPolicy::FullNeighborhood);
        let mut st = ApstState::new(cfg, Alphabet::binary(), 0).unwrap();
        st.learn(&[], &[P, M, P], 1.0, 0.1, 1.0);
        // every node is fresh: score == tau * omega(len, distance)
        for id in st.hyp.tree.node_ids() {
            let s = st.hyp.tree.spelled(id);
            let hist = &[P, M, P][3 - s.len()..];
            let k = crate::suffix_tree::hamming(&s, hist);
            assert!(close(st.hyp.tree.score(id), 0.1 * omega(s.len(), k, &p), 1e-15));
        }
        // complete binary tree of depth 3 within distance 2: 2 + 4 + 7
        assert_eq!(st.hyp.tree.node_count(), 13);
        st.learn(&[], &[P, M, P], 1.0, 0.1, 1.0);
        for id in st.hyp.tree.node_ids() {
            let s = st.hyp.tree.spelled(id);
            let k = crate::suffix_tree::hamming(&s, &[P, M, P][3 - s.len()..]);
            assert!(close(st.hyp.tree.score(id), 0.2 * omega(s.len(), k, &p), 1e-15));
        }
    }

    #[test]
    fn grow_depth_unchanged_when_condition_holds() {
        let p = params(4.0, 0.5, 1);
        // huge right-hand side: first admissible depth
        assert_eq!(grow_depth(&p, 0, 0.0, 1e-6, 1.0), 5);
        assert_eq!(grow_depth(&p, 9, 0.0, 1e-6, 1.0), 9);
    }

    #[test]
    fn grow_depth_matches_scan() {
        // lambda = 4, eps = 1, P = 0, tau = 0.1, ell = 1: threshold 2.5
        let p = params(4.0, 0.5, 1);
        let scan = (5..)
            .find(|&d| gamma_bar(&p) * weighting::chernoff_factor(d, &p) <= 2.5)
            .unwrap();
        assert_eq!(scan, 7);
        assert_eq!(grow_depth(&p, 0, 0.0, 0.1, 1.0), scan);
        assert!(u_lambda(6, &p) > 2.5 && u_lambda(7, &p) <= 2.5);
    }

    #[test]
    fn self_bounded_gate() {
        let p = params(2.0, 0.9, 0);
        let mut st = ApstState::new(ApstConfig::self_bounded(p), Alphabet::binary(), 1).unwrap();
        st.hyp.w = vec![0.6];
        let before = st.clone();
        let rec = st.step(&[1.0], &[P, P], P).unwrap();
        assert!(close(rec.loss, 0.4, 1e-15));
        assert!(!rec.updated);
        assert_eq!(rec.p_after, before.p_acc);
        assert_eq!(st, before);
    }

    #[test]
    fn constant_stream_quiesces() {
        let p = params(2.0, 0.9, 0);
        let mut st = ApstState::new(ApstConfig::self_bounded(p), Alphabet::binary(), 0).unwrap();
        let stream = vec![P; 300];
        let mut last_update = 0;
        for t in 1..=stream.len() {
            let rec = st.step(&[], &stream[..t - 1], P).unwrap();
            if t == 1 {
                assert!(rec.updated && rec.loss == 1.0);
                assert!(rec.d_after >= 2);
            }
            if rec.updated {
                last_update = t;
            }
            assert!(rec.p_after * rec.p_after <= rec.l_after * (1.0 + 1e-9));
        }
        assert!(last_update < 200, "still updating at {last_update}");
        let depth = st.hyp.tree.max_depth();
        for t in 301..=400 {
            let hist = vec![P; t - 1];
            assert!(!st.step(&[], &hist, P).unwrap().updated);
        }
        assert_eq!(st.hyp.tree.max_depth(), depth);
    }

    #[test]
    fn geometric_weights_need_exact_matching() {
        let cfg = ApstConfig::unbounded(params(2.0, 0.5, 1)).with_weights(SuffixWeights::Geometric);
        assert!(cfg.validate().is_err());
        let cfg = ApstConfig::self_bounded(params(2.0, 0.5, 0)).with_weights(SuffixWeights::Geometric);
        assert!(cfg.validate().is_err());
        let mut cfg = ApstConfig::self_bounded(params(2.0, 0.5, 0));
        cfg.margin_gate = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn replay_zero_hypothesis_is_all_ones() {
        let ds = Dataset::new(Alphabet::binary(), vec![P, M, M, P, P], None, None).unwrap();
        let cfg = ApstConfig::unbounded(params(2.0, 0.5, 1));
        let zero = PstHypothesis::new(Alphabet::binary(), 0);
        assert_eq!(replay_losses(&zero, &cfg, &ds, None).unwrap(), vec![1.0; 5]);
    }
}
