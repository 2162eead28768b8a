//! Numerical checks of the weight-mass ladder, the Chernoff tail and the
//! mistake bounds on recorded traces.

use serde::{Deserialize, Serialize};

use super::oracle::closed_form_sum_omega_sq;
use super::{pst_equivalent_config, Model};
use crate::error::{Error, Result};
use crate::learner_apst::{replay_losses, ApstConfig, Mode, RoundRecord};
use crate::learner_pst::PstHypothesis;
use crate::sequences::{symbol_of_sign, Alphabet, Dataset, InputStream, Symbol};
use crate::weighting::{self, WeightParams};

const GOLDEN: f64 = 1.618033988749895;
const REL_TOL: f64 = 1e-9;

/// Weight mass of the full binary epsilon-ball around a history of length
/// `t - 1`: `sum_{i < t} sum_{k <= eps} C(i, k) omega(i, k)^2`.
pub fn brute_weight_mass(t: usize, p: &WeightParams) -> f64 {
    closed_form_sum_omega_sq(p, t.saturating_sub(1), 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub lambda: f64,
    pub xi: f64,
    pub epsilon: usize,
    pub t: usize,
    pub brute: f64,
    pub lemma2: f64,
    pub cor21: f64,
    pub lemma3: f64,
    pub gamma: f64,
    /// Smallest relative slack across the four inequalities.
    pub worst_slack: f64,
    pub passed: bool,
}

fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE)
}

/// Checks `brute <= lemma2(t) <= cor21`, `brute <= lemma3` and
/// `brute <= gamma` for every grid point.
pub fn ladder_rows(lambdas: &[f64], xis: &[f64], epsilons: &[usize], ts: &[usize]) -> Result<Vec<LadderRow>> {
    let mut out = Vec::new();
    for &lambda in lambdas {
        for &xi in xis {
            for &epsilon in epsilons {
                let p = WeightParams::new(lambda, xi, epsilon)?;
                let (cor21, lemma3, gamma) = (
                    weighting::cor21_bound(&p),
                    weighting::lemma3_bound(&p),
                    weighting::gamma_const(&p),
                );
                for &t in ts {
                    let brute = brute_weight_mass(t, &p);
                    let lemma2 = weighting::lemma2_bound(t.max(1), &p);
                    let worst_slack = [
                        rel_slack(brute, lemma2),
                        rel_slack(lemma2, cor21),
                        rel_slack(brute, lemma3),
                        rel_slack(brute, gamma),
                    ]
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                    out.push(LadderRow {
                        lambda,
                        xi,
                        epsilon,
                        t,
                        brute,
                        lemma2,
                        cor21,
                        lemma3,
                        gamma,
                        worst_slack,
                        passed: worst_slack >= -1e-12,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `sum_{k <= eps} (lambda^k / k!) P(Poisson(lambda) >= d + 1 - k)`, the
/// weight of suffixes longer than `d`, summed term by term.
pub fn poisson_tail(d: usize, p: &WeightParams) -> f64 {
    let mut total = 0.0;
    let mut lk_over_kfact = 1.0;
    for k in 0..=p.epsilon {
        if k > 0 {
            lk_over_kfact *= p.lambda / k as f64;
        }
        let start = (d + 1).saturating_sub(k);
        let mut pmf = (-p.lambda).exp();
        for j in 1..=start {
            pmf *= p.lambda / j as f64;
        }
        let mut tail = 0.0;
        let mut j = start;
        loop {
            tail += pmf;
            j += 1;
            pmf *= p.lambda / j as f64;
            if (j as f64) > p.lambda && pmf <= tail * 1e-18 {
                break;
            }
        }
        total += lk_over_kfact * tail;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffRow {
    pub lambda: f64,
    pub xi: f64,
    pub epsilon: usize,
    pub d: usize,
    pub u_lambda: f64,
    pub tail: f64,
    pub f: f64,
    pub f_next: f64,
    pub passed: bool,
}

/// For `d` from `ceil(lambda + eps)` to 20 beyond it, checks
/// `u_lambda(d) >= poisson_tail(d)` and `f(d + 1) < f(d)`.
pub fn chernoff_rows(lambdas: &[f64], xis: &[f64], epsilons: &[usize], extra: usize) -> Result<Vec<ChernoffRow>> {
    let mut out = Vec::new();
    for &lambda in lambdas {
        for &xi in xis {
            for &epsilon in epsilons {
                let p = WeightParams::new(lambda, xi, epsilon)?;
                let d0 = p.min_depth();
                for d in d0..=d0 + extra {
                    let u = weighting::u_lambda(d, &p);
                    let tail = poisson_tail(d, &p);
                    let f = weighting::chernoff_factor(d, &p);
                    let f_next = weighting::chernoff_factor(d + 1, &p);
                    out.push(ChernoffRow {
                        lambda,
                        xi,
                        epsilon,
                        d,
                        u_lambda: u,
                        tail,
                        f,
                        f_next,
                        passed: u >= tail * (1.0 - 1e-12) && f_next < f,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    pub rounds_checked: usize,
    pub violations: usize,
    /// Smallest relative slack `(rhs - lhs) / rhs`; negative means violated.
    pub worst_slack: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
}

impl BoundCheck {
    fn aggregate(name: &str, slacks: impl IntoIterator<Item = f64>) -> Self {
        let mut rounds = 0;
        let mut violations = 0;
        let mut worst = f64::INFINITY;
        for s in slacks {
            rounds += 1;
            if s < -REL_TOL {
                violations += 1;
            }
            worst = worst.min(s);
        }
        Self {
            name: name.into(),
            passed: violations == 0,
            rounds_checked: rounds,
            violations,
            worst_slack: worst,
            lhs: None,
            rhs: None,
        }
    }

    fn inequality(name: &str, lhs: f64, rhs: f64, rounds: usize) -> Self {
        let slack = rel_slack(lhs, rhs);
        Self {
            name: name.into(),
            passed: lhs <= rhs * (1.0 + REL_TOL),
            rounds_checked: rounds,
            violations: usize::from(lhs > rhs * (1.0 + REL_TOL)),
            worst_slack: slack,
            lhs: Some(lhs),
            rhs: Some(rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub passed: bool,
    pub rounds: usize,
    pub gamma: f64,
    pub checks: Vec<BoundCheck>,
}

/// Verifies a complete trace against the model it produced:
///
/// * every round's squared weight mass is within the cap,
/// * `P_t^2 <= L_t` and `d_t` is monotone (self-bounded),
/// * the mistake bound with `h*` the zero hypothesis and with `h*` the final
///   hypothesis, whose losses are replayed over the stream rebuilt from the
///   trace labels (binary models only).
///
/// `inputs` supplies the side information when the model has `n > 0`.
pub fn verify_bounds(trace: &[RoundRecord], model: &Model, inputs: Option<&InputStream>) -> Result<BoundReport> {
    let (config, alphabet_size, hyp) = match model {
        Model::Pst(m) => (pst_equivalent_config(), 2, Some(&m.hyp)),
        Model::Apst(m) => (m.config, m.hyp.tree.alphabet_size(), Some(&m.hyp)),
        Model::ApstMc(m) => (m.config, m.alphabet.size(), None),
    };
    let gamma = config.gamma();
    let cap = config.mass_cap(alphabet_size);
    let mut checks = vec![BoundCheck::aggregate(
        "weight-mass",
        trace.iter().map(|r| rel_slack(r.sum_omega_sq, cap)),
    )];
    for (i, r) in trace.iter().enumerate() {
        if r.t != i + 1 {
            return Err(Error::Domain(format!("trace round {} found at position {}", r.t, i + 1)));
        }
    }
    let self_bounded = config.mode == Mode::SelfBounded;
    if self_bounded {
        checks.push(BoundCheck::aggregate(
            "p-squared-le-l",
            trace.iter().map(|r| {
                let p2 = r.p_after * r.p_after;
                if r.l_after == 0.0 && p2 == 0.0 {
                    0.0
                } else {
                    rel_slack(p2, r.l_after)
                }
            }),
        ));
        let floor = config.params.min_depth();
        let mut prev = 0;
        let mut seen_update = false;
        checks.push(BoundCheck::aggregate(
            "depth-monotone",
            trace.iter().map(|r| {
                seen_update |= r.updated;
                let ok = r.d_after >= prev && (!seen_update || r.d_after >= floor);
                prev = r.d_after;
                if ok {
                    0.0
                } else {
                    -1.0
                }
            }),
        ));
    }
    if let Some(hyp) = hyp {
        let t_len = trace.len();
        let lhs: f64 = trace
            .iter()
            .filter(|r| !self_bounded || r.loss > 0.5)
            .map(|r| r.loss * r.loss)
            .sum();
        let scale = 3.0 + gamma;
        checks.push(BoundCheck::inequality("zero-hypothesis", lhs, scale * t_len as f64 / 2.0, t_len));
        let ds = rebuild_dataset(trace, hyp, inputs)?;
        let star = replay_losses(hyp, &config, &ds, None)?;
        let half_star: f64 = 0.5 * star.iter().map(|l| l * l).sum::<f64>();
        let w2 = hyp.w.iter().map(|w| w * w).sum::<f64>();
        let g2 = hyp.tree.score_norm_sq();
        let rhs = if self_bounded {
            let s = GOLDEN * g2.sqrt() + w2.sqrt() + half_star.sqrt();
            scale * s * s
        } else {
            scale * (w2 + g2 + half_star)
        };
        checks.push(BoundCheck::inequality("final-hypothesis", lhs, rhs, t_len));
    }
    Ok(BoundReport {
        passed: checks.iter().all(|c| c.passed),
        rounds: trace.len(),
        gamma,
        checks,
    })
}

fn rebuild_dataset(trace: &[RoundRecord], hyp: &PstHypothesis, inputs: Option<&InputStream>) -> Result<Dataset> {
    let output: Vec<Symbol> = trace.iter().map(|r| symbol_of_sign(r.y as f64)).collect();
    let input = match (inputs, hyp.w.len()) {
        (Some(x), _) => Some(x.clone()),
        (None, 0) => None,
        (None, n) => {
            return Err(Error::Domain(format!(
                "model has {n}-dimensional side information; supply the input stream"
            )))
        }
    };
    Dataset::new(Alphabet::binary(), output, input, None)
}

/// Bound report for an in-memory run, with the config taken from the model.
pub fn model_config(model: &Model) -> ApstConfig {
    match model {
        Model::Pst(_) => pst_equivalent_config(),
        Model::Apst(m) => m.config,
        Model::ApstMc(m) => m.config,
    }
}
