//! Condition a GP on noisy observations and predict at new inputs.
//!
//!     cargo run --example fit_predict

use kernval::gp::{fit, log_marginal_likelihood, Dataset};
use kernval::kernels::{points_1d, KernelFamily, KernelSpec, MeanSpec};
use kernval::synth::linspace;

fn main() -> kernval::Result<()> {
    let xs = linspace(0.0, 1.0, 12);
    let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin()).collect();
    let data = Dataset::from_1d(&xs, ys, 0.05)?;
    let kernel = KernelSpec::new(KernelFamily::Matern25, 1.0, 0.2)?;
    let mean = MeanSpec::zero();

    println!("log marginal likelihood: {:.4}", log_marginal_likelihood(&kernel, &mean, &data)?);
    let model = fit(kernel, mean, data)?;
    println!("jitter used: {:e}", model.jitter());

    let test = [0.05, 0.5, 0.95, 1.5];
    let pred = model.predict(&points_1d(&test))?;
    for (i, x) in test.iter().enumerate() {
        println!(
            "x = {x:4.2}: mean {:+.4}  sd {:.4}  truth {:+.4}",
            pred.mean[i],
            pred.covariance[(i, i)].sqrt(),
            (6.0 * x).sin()
        );
    }
    Ok(())
}
