//! Suffix contribution weights and the constants that bound their mass.
//!
//! A suffix of length `i` matched at Hamming distance `k` contributes
//!
//! ```text
//! omega(i, k) = sqrt( (1 - xi)^k * lambda^i * exp(-lambda) / i! )
//! ```
//!
//! i.e. the square root of a Poisson(lambda) mass damped by `(1 - xi)^k`.
//! Everything here is evaluated in log space through `ln i!`, and the
//! integer-order incomplete gamma ratios reduce to partial Poisson sums:
//!
//! ```text
//! Gamma(1 + eps, lambda) / Gamma(1 + eps) = exp(-lambda) * sum_{k=0}^{eps} lambda^k / k!
//! Gamma(t, x) / Gamma(t)                  = exp(-x)      * sum_{j=0}^{t-1} x^j / j!
//! ```

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Hyperparameters of the weighting: Poisson rate `lambda > 0`, mismatch
/// damping `xi` in `(0, 1)` and the integer Hamming budget `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
    pub xi: f64,
    pub epsilon: usize,
}

impl WeightParams {
    pub fn new(lambda: f64, xi: f64, epsilon: usize) -> Result<Self> {
        let p = Self {
            lambda,
            xi,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Accepts a real-valued budget but only integral values.
    pub fn with_real_epsilon(lambda: f64, xi: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.fract() == 0.0 && epsilon < 1e6) {
            return Err(Error::Domain(format!(
                "epsilon must be a non-negative integer, got {epsilon}"
            )));
        }
        Self::new(lambda, xi, epsilon as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::Domain(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        Ok(())
    }

    /// `ceil(lambda + epsilon)`, the smallest admissible self-bounded depth.
    pub fn min_depth(&self) -> usize {
        ((self.lambda + self.epsilon as f64).ceil() as usize).max(1)
    }
}

#[inline]
fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// `ln omega(i, k)`.
pub fn log_omega(i: usize, k: usize, p: &WeightParams) -> f64 {
    0.5 * log_omega_sq(i, k, p)
}

/// `ln omega(i, k)^2`.
pub fn log_omega_sq(i: usize, k: usize, p: &WeightParams) -> f64 {
    k as f64 * (-p.xi).ln_1p() + i as f64 * p.lambda.ln() - p.lambda - ln_fact(i)
}

/// Contribution weight of a length-`i` suffix matched at distance `k`.
///
/// Pure function of its arguments; `k <= epsilon` is not required.
pub fn omega(i: usize, k: usize, p: &WeightParams) -> f64 {
    log_omega(i, k, p).exp()
}

pub fn omega_sq(i: usize, k: usize, p: &WeightParams) -> f64 {
    log_omega_sq(i, k, p).exp()
}

/// Checked variant of [`omega`] that validates the parameter domain.
pub fn try_omega(i: usize, k: usize, p: &WeightParams) -> Result<f64> {
    p.validate()?;
    if i == 0 || k > i {
        return Err(Error::Domain(format!("omega needs 1 <= i and k <= i, got i={i}, k={k}")));
    }
    Ok(omega(i, k, p))
}

/// The classical exponentially decaying suffix weight `2^{-i/2}`.
#[inline]
pub fn geometric_weight(i: usize) -> f64 {
    (-0.5 * i as f64).exp2()
}

/// `sum_{j=0}^{n} exp(j ln x - ln j! + shift)`, summed in log space.
fn partial_exp_sum(x: f64, n: usize, shift: f64) -> f64 {
    let lx = x.ln();
    (0..=n)
        .map(|j| (j as f64 * lx - ln_fact(j) + shift).exp())
        .sum()
}

/// `Gamma(1 + eps, lambda) / Gamma(1 + eps)`: the probability that a
/// Poisson(lambda) variable is at most `epsilon`.
pub fn gamma_bar(p: &WeightParams) -> f64 {
    partial_exp_sum(p.lambda, p.epsilon, -p.lambda)
}

/// `sum_{k=0}^{eps} lambda^k / k!`, i.e. `e^lambda * gamma_bar`.
pub fn lemma3_bound(p: &WeightParams) -> f64 {
    partial_exp_sum(p.lambda, p.epsilon, 0.0)
}

/// `-e^{-lambda} + e^{lambda (1 - xi)}`.
pub fn cor21_bound(p: &WeightParams) -> f64 {
    (p.lambda * (1.0 - p.xi)).exp() - (-p.lambda).exp()
}

/// Position-dependent bound on the per-round squared weight mass with
/// history length `t - 1`:
/// `-e^{-lambda} + e^{-lambda} sum_{j=0}^{t-1} (lambda (2 - xi))^j / j!`.
pub fn lemma2_bound(t: usize, p: &WeightParams) -> f64 {
    assert!(t >= 1, "lemma2_bound needs t >= 1");
    let partial = partial_exp_sum(p.lambda * (2.0 - p.xi), t - 1, -p.lambda);
    partial - (-p.lambda).exp()
}

/// The constant `gamma` capping the squared weight mass of any binary match
/// set, `min(cor21_bound, lemma3_bound)`.
pub fn gamma_const(p: &WeightParams) -> f64 {
    cor21_bound(p).min(lemma3_bound(p))
}

/// Alphabet-aware cap for `K`-ary trees. A length-`i` string has
/// `C(i, k) (K - 1)^k` neighbours at distance `k`, which turns the two
/// branches into `-e^{-lambda} + e^{lambda (K - 1)(1 - xi)}` and
/// `sum_k ((K - 1) lambda)^k / k!`. Equals [`gamma_const`] for `K = 2`.
pub fn gamma_const_k(p: &WeightParams, alphabet_size: usize) -> f64 {
    if alphabet_size <= 2 {
        return gamma_const(p);
    }
    let m = (alphabet_size - 1) as f64;
    let first = (p.lambda * m * (1.0 - p.xi)).exp() - (-p.lambda).exp();
    let second = partial_exp_sum(m * p.lambda, p.epsilon, 0.0);
    first.min(second)
}

/// `ln f(d) = d + d ln lambda - d ln d`.
pub fn log_chernoff_factor(d: usize, p: &WeightParams) -> f64 {
    assert!(d >= 1, "chernoff factor needs d >= 1");
    let d = d as f64;
    d + d * p.lambda.ln() - d * d.ln()
}

/// `f(d) = e^d lambda^d d^{-d}`.
pub fn chernoff_factor(d: usize, p: &WeightParams) -> f64 {
    log_chernoff_factor(d, p).exp()
}

pub fn try_chernoff_factor(d: usize, p: &WeightParams) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("chernoff factor is undefined at d = 0".into()));
    }
    Ok(chernoff_factor(d, p))
}

/// `ln u_lambda(d) = ln gamma_bar + ln f(d)`.
pub fn log_u_lambda(d: usize, p: &WeightParams) -> f64 {
    gamma_bar(p).ln() + log_chernoff_factor(d, p)
}

/// Chernoff upper bound on the weight mass of suffixes longer than `d`.
pub fn u_lambda(d: usize, p: &WeightParams) -> f64 {
    log_u_lambda(d, p).exp()
}
