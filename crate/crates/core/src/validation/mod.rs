//! Kernel validation against held-out data.
//!
//! A prediction `N(μ_pred, K_pred)` is checked two ways:
//!
//! 1. the Mahalanobis distance `χ²_M`, which is χ² distributed with one
//!    degree of freedom per test point when the model is right;
//! 2. the normal-mode residuals `e_k`, whose survival probabilities `p_k`
//!    should be i.i.d. uniform. A Beta(a, b) fit to the `p_k` and a grid
//!    posterior over `(a, b)` quantify how far they are from `(1, 1)`.

mod beta;
mod posterior;
mod residuals;

pub use beta::{
    beta_log_likelihood, beta_mle, clamp_probability, BetaFit, BetaFitStatus, BetaSample, P_CLAMP,
};
pub use posterior::{
    beta_posterior, beta_posterior_auto, iso_posterior_coverage, BetaPosterior, GridConfig,
    BOUNDARY_LIKELIHOOD_RATIO, MAX_WIDENINGS, MIN_RESOLUTION,
};
pub use residuals::{mahalanobis, normal_mode_residuals, NormalModeResiduals, EIGEN_FLOOR};

use crate::error::{Error, Result};
use crate::gp::Prediction;
use crate::specfn::chi2_survival;

/// The uniform distribution in Beta parameter space.
pub const UNIFORM_POINT: (f64, f64) = (1.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub mahalanobis: f64,
    pub dof: usize,
    pub p_value: f64,
    pub residuals: NormalModeResiduals,
    pub beta_fit: BetaFit,
    pub posterior: BetaPosterior,
    /// Iso-posterior coverage at `(a, b) = (1, 1)`.
    pub uniform_coverage: f64,
    /// Near-null covariance modes were dropped; `mahalanobis` and `dof`
    /// then refer to the retained modes only.
    pub reduced_rank: bool,
    pub grid_widenings: usize,
}

/// Runs the full battery on one prediction and its held-out observations.
///
/// `prediction` must describe the observations themselves, so noisy test
/// data needs [`Prediction::with_observation_noise`] first.
pub fn validate(prediction: &Prediction, observed: &[f64], grid: &GridConfig) -> Result<ValidationReport> {
    if observed.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "validation needs at least two test points (got {})",
            observed.len()
        )));
    }
    let residuals = normal_mode_residuals(prediction, observed)?;
    let reduced_rank = residuals.dropped_modes > 0;
    let (chi2, dof) = if reduced_rank {
        (residuals.sum_of_squares(), residuals.len())
    } else {
        mahalanobis(prediction, observed)?
    };
    let p_value = chi2_survival(chi2, u32::try_from(dof).unwrap_or(u32::MAX))?;

    let beta_fit = beta_mle(&residuals.survival_probs)?;
    let (posterior, grid_widenings) = beta_posterior_auto(&residuals.survival_probs, grid, &beta_fit)?;
    let uniform_coverage = iso_posterior_coverage(&posterior, UNIFORM_POINT)?;

    Ok(ValidationReport {
        mahalanobis: chi2,
        dof,
        p_value,
        residuals,
        beta_fit,
        posterior,
        uniform_coverage,
        reduced_rank,
        grid_widenings,
    })
}

/// One histogram bin `[left, right)`; the last bin also holds `right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    pub density: f64,
}

/// Density-normalized histogram of values in `[0, 1]` with equal-width bins.
/// For reporting only; inference uses the unbinned likelihood.
pub fn pk_histogram(p: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if p.is_empty() {
        return Err(Error::InvalidInput("cannot histogram an empty sample".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("histogram values must lie in [0, 1]".into()));
    }
    let mut counts = vec![0usize; bins];
    for &v in p {
        let k = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let width = 1.0 / bins as f64;
    let n = p.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            left: k as f64 * width,
            right: (k + 1) as f64 * width,
            count,
            density: count as f64 / (n * width),
        })
        .collect())
}
