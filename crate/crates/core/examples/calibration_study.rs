//! Replicate study of the correct model: p-values and pooled p_k should be
//! uniform, and (1, 1) should usually sit inside the 95% region.
//!
//!     cargo run --release --example calibration_study [replicates]

use kernval::experiments::{replicate_results, ExperimentConfig, TrainMode};
use kernval::kernels::KernelFamily;
use kernval::stats::{ks_uniform, median};

fn main() -> kernval::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    for (family, mode) in [
        (KernelFamily::Matern15, TrainMode::FixAtTruth),
        (KernelFamily::Matern15, TrainMode::TrainMle),
        (KernelFamily::SquaredExponential, TrainMode::TrainMle),
    ] {
        let cfg = ExperimentConfig {
            candidate_kernel: family,
            train_mode: mode,
            n_replicates: n,
            ..ExperimentConfig::default()
        };
        let rows = replicate_results(&cfg)?;
        let ok: Vec<_> = rows.iter().filter(|r| r.is_ok()).collect();
        let p: Vec<f64> = ok.iter().map(|r| r.p_value).collect();
        let covered = ok.iter().filter(|r| r.uniform_coverage < 0.95).count();
        println!(
            "{family} ({mode}): {} ok, median p {:.3}, KS p {:.3}, (1,1) inside 95% region in {}/{}",
            ok.len(),
            median(&p).unwrap_or(f64::NAN),
            ks_uniform(&p)?.p_value,
            covered,
            ok.len()
        );
    }
    Ok(())
}
