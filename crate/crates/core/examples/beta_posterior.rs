//! Beta fit to survival probabilities, grid posterior and iso-posterior
//! coverage of the uniform point. Writes the heatmap to a directory.
//!
//!     cargo run --release --example beta_posterior [out_dir]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kernval::experiments::svg::emit_posterior_heatmap;
use kernval::validation::{beta_mle, beta_posterior_auto, iso_posterior_coverage, GridConfig, UNIFORM_POINT};

fn main() -> kernval::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("kernval-examples"), Into::into);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let uniform: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..1.0)).collect();
    // Too many extreme values: what an overconfident model produces.
    let u_shaped: Vec<f64> = (0..80)
        .map(|_| {
            let u = rng.random_range(0.0f64..1.0).powf(2.5);
            if rng.random_bool(0.5) { u } else { 1.0 - u }
        })
        .collect();
    let samples = [("uniform", uniform), ("u-shaped", u_shaped)];
    for (name, p) in samples {
        let fit = beta_mle(&p)?;
        let (post, widenings) = beta_posterior_auto(&p, &GridConfig::default(), &fit)?;
        let coverage = iso_posterior_coverage(&post, UNIFORM_POINT)?;
        let summary = emit_posterior_heatmap(
            &post,
            Some((fit.a_hat, fit.b_hat)),
            &out.join(format!("{name}_posterior.csv")),
            &out.join(format!("{name}_posterior.svg")),
            &format!("sample = {name}\n"),
        )?;
        println!(
            "{name}: a = {:.3}, b = {:.3}, coverage at (1,1) = {coverage:.4}, widenings {widenings}, contours {:?}",
            fit.a_hat,
            fit.b_hat,
            summary.contours.iter().map(|c| (c.level, (c.enclosed_mass * 1e4).round() / 1e4)).collect::<Vec<_>>()
        );
    }
    println!("heatmaps written to {}", out.display());
    Ok(())
}
