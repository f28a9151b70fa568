//! Gaussian-process regression with kernel-misspecification diagnostics.
//!
//! A fitted GP is checked against held-out data through the Mahalanobis
//! distance of its test residuals. Each residual is also projected onto the
//! normal modes of the predictive covariance, and a Beta posterior is placed
//! on the distribution of the per-mode p-values.
//!
//! Modules:
//! - [`kernels`]: RBF and Matern 1.5 / 2.5 covariances with hyperparameter gradients
//! - [`gp`]: conditioning, prediction, log marginal likelihood, training
//! - [`synth`]: seeded synthetic experiments (truth function, train/test split)
//! - [`specfn`]: erf, normal tails, incomplete gamma, chi-square survival
//! - [`validation`]: Mahalanobis report, p_k histogram, Beta MLE and grid posterior
//! - [`experiments`]: config files, the replicate runner, CSV/SVG output
//!
//! Runnable walkthroughs are in `examples/`:
//! `kernels`, `fit_predict`, `train_hyperparameters`,
//! `mahalanobis_normal_modes`, `beta_posterior`, `misspecification_study`,
//! `calibration_study`, `experiment_config`.

pub mod error;
pub mod experiments;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod optim;
pub mod specfn;
pub mod stats;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
