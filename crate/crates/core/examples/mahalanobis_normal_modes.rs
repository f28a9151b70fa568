//! Mahalanobis goodness of fit and normal-mode residuals for one prediction.
//!
//!     cargo run --release --example mahalanobis_normal_modes

use kernval::experiments::{fit_candidate, ExperimentConfig, TrainMode};
use kernval::kernels::KernelFamily;
use kernval::synth::ExperimentGenerator;
use kernval::validation::{mahalanobis, normal_mode_residuals};

fn main() -> kernval::Result<()> {
    let base = ExperimentConfig::default();
    let generator = ExperimentGenerator::new(base.synth_config()?)?;
    let exp = generator.generate(2024)?;
    for (family, mode) in [
        (KernelFamily::Matern15, TrainMode::FixAtTruth),
        (KernelFamily::SquaredExponential, TrainMode::TrainMle),
    ] {
        let cfg = ExperimentConfig {
            candidate_kernel: family,
            train_mode: mode,
            ..base.clone()
        };
        let model = fit_candidate(&cfg, &exp.train_set, 2024)?;
        let fitted = model.condition(&exp.train_set)?;
        let pred = model.predict_observations(&fitted, &exp.test_set)?;
        let (chi2, dof) = mahalanobis(&pred, exp.test_set.values())?;
        let res = normal_mode_residuals(&pred, exp.test_set.values())?;
        let p = kernval::specfn::chi2_survival(chi2, dof as u32)?;
        let tails = res.survival_probs.iter().filter(|p| **p < 0.05 || **p > 0.95).count();
        println!("{family} ({mode}): χ²_M = {chi2:.1} for {dof} dof, p = {p:.3e}");
        println!(
            "  Σ e_k² = {:.1}; largest/smallest eigenvalue {:.2e}/{:.2e}; {tails} of {} p_k in the outer 10%",
            res.sum_of_squares(),
            res.eigenvalues[0],
            res.eigenvalues[res.len() - 1],
            res.len()
        );
    }
    Ok(())
}
