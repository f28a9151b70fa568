//! Maximum-likelihood hyperparameters by multi-start Nelder–Mead.
//!
//!     cargo run --release --example train_hyperparameters

use kernval::gp::{train, TrainOptions};
use kernval::kernels::{KernelFamily, KernelSpec, MeanSpec};
use kernval::synth::{ExperimentGenerator, SynthConfig};

fn main() -> kernval::Result<()> {
    let truth = KernelSpec::new(KernelFamily::Matern15, 1.0, 0.5)?;
    let generator = ExperimentGenerator::new(SynthConfig {
        truth_kernel: truth,
        truth_mean: MeanSpec::zero(),
        domain: (0.0, 10.0),
        grid_points: 1000,
        noise_sd: 0.05,
        n_train: 200,
        n_test: 10,
    })?;
    let exp = generator.generate(3)?;
    println!("truth: σ² = 1, ℓ = 0.5 ({})", truth.family());
    for family in KernelFamily::ALL {
        for train_noise in [false, true] {
            let out = train(
                family,
                &MeanSpec::zero(),
                &exp.train_set,
                &TrainOptions {
                    restarts: 5,
                    seed: 1,
                    train_noise,
                },
            )?;
            println!(
                "{family:>9} train_noise={train_noise:<5}  σ² = {:.3}  ℓ = {:.3}  extra noise = {:.2e}  lml = {:.2}{}",
                out.kernel.signal_variance(),
                out.kernel.length_scale(),
                out.noise_variance.unwrap_or(0.0),
                out.log_likelihood,
                if out.hit_bound { "  (at search bound)" } else { "" }
            );
        }
    }
    Ok(())
}
