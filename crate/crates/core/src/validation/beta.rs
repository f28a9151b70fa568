//! Maximum-likelihood Beta fit to the survival probabilities.
//!
//! The likelihood is unbinned: `ln L(a, b) = Σ_k ln π_β(a,b)(p_k)`, which
//! depends on the data only through `n`, `Σ ln p_k` and `Σ ln(1 − p_k)`.

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::specfn::ln_beta_normalizer;

/// Probabilities are clamped into `[P_CLAMP, 1 − P_CLAMP]` before entering
/// the Beta likelihood.
pub const P_CLAMP: f64 = 1e-15;

const LOG_SHAPE_BOUNDS: (f64, f64) = (-9.21, 9.21); // ≈ [1e-4, 1e4]

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Sufficient statistics of a sample on (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSample {
    pub n: usize,
    pub sum_ln_p: f64,
    pub sum_ln_q: f64,
    pub mean: f64,
    pub variance: f64,
}

impl BetaSample {
    /// Clamps each value, then accumulates the statistics.
    pub fn new(p: &[f64]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite probability".into()));
        }
        let n = p.len();
        let clamped: Vec<f64> = p.iter().map(|&v| clamp_probability(v)).collect();
        let sum_ln_p = clamped.iter().map(|v| v.ln()).sum();
        let sum_ln_q = clamped.iter().map(|v| (-v).ln_1p()).sum();
        let nf = n.max(1) as f64;
        let mean = clamped.iter().sum::<f64>() / nf;
        let variance = clamped.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        Ok(BetaSample {
            n,
            sum_ln_p,
            sum_ln_q,
            mean,
            variance,
        })
    }

    pub fn log_likelihood(&self, a: f64, b: f64) -> f64 {
        self.n as f64 * ln_beta_normalizer(a, b) + (a - 1.0) * self.sum_ln_p + (b - 1.0) * self.sum_ln_q
    }

    /// Method-of-moments estimate, when the sample variance admits one.
    pub fn method_of_moments(&self) -> Option<(f64, f64)> {
        let (m, v) = (self.mean, self.variance);
        if !(v > 0.0) || v >= m * (1.0 - m) {
            return None;
        }
        let common = m * (1.0 - m) / v - 1.0;
        Some((m * common, (1.0 - m) * common))
    }
}

/// Log-likelihood of `p` under Beta(a, b), with clamping.
pub fn beta_log_likelihood(p: &[f64], a: f64, b: f64) -> Result<f64> {
    Ok(BetaSample::new(p)?.log_likelihood(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaFitStatus {
    Converged,
    /// Iteration limit reached; the estimate is the best point found.
    NotConverged,
    /// All values identical: the likelihood is unbounded and no MLE exists.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub max_log_likelihood: f64,
    pub status: BetaFitStatus,
}

impl BetaFit {
    pub fn is_degenerate(&self) -> bool {
        self.status == BetaFitStatus::Degenerate
    }
}

/// Nelder–Mead in `(ln a, ln b)` from the method-of-moments start.
pub fn beta_mle(p: &[f64]) -> Result<BetaFit> {
    if p.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a Beta fit needs at least two values (got {})",
            p.len()
        )));
    }
    let sample = BetaSample::new(p)?;
    if !(sample.variance > 0.0) {
        return Ok(BetaFit {
            a_hat: 1.0,
            b_hat: 1.0,
            max_log_likelihood: sample.log_likelihood(1.0, 1.0),
            status: BetaFitStatus::Degenerate,
        });
    }
    let (a0, b0) = sample.method_of_moments().unwrap_or((1.0, 1.0));
    let objective = |x: &[f64]| {
        let inside = x.iter().all(|v| *v >= LOG_SHAPE_BOUNDS.0 && *v <= LOG_SHAPE_BOUNDS.1);
        if inside {
            -sample.log_likelihood(x[0].exp(), x[1].exp())
        } else {
            f64::INFINITY
        }
    };
    let opts = NelderMeadOptions {
        max_iter: 5000,
        f_tol: 1e-10,
        x_tol: 1e-9,
    };
    let start = [a0.ln().clamp(-9.0, 9.0), b0.ln().clamp(-9.0, 9.0)];
    let first = nelder_mead(objective, &start, &[0.2, 0.2], opts);
    let second = nelder_mead(objective, &first.x, &[0.01, 0.01], opts);

    let (mut a_hat, mut b_hat, mut best) = (second.x[0].exp(), second.x[1].exp(), -second.value);
    let uniform = sample.log_likelihood(1.0, 1.0);
    if uniform > best {
        (a_hat, b_hat, best) = (1.0, 1.0, uniform);
    }
    Ok(BetaFit {
        a_hat,
        b_hat,
        max_log_likelihood: best,
        status: if first.converged && second.converged {
            BetaFitStatus::Converged
        } else {
            BetaFitStatus::NotConverged
        },
    })
}
