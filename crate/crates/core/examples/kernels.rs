//! Evaluate the three stationary kernels and draw one prior sample from each.
//!
//!     cargo run --example kernels

use kernval::kernels::{KernelFamily, KernelSpec, MeanSpec};
use kernval::synth::{linspace, sample_prior_function};

fn main() -> kernval::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "r", "rbf", "matern15", "matern25");
    let specs: Vec<KernelSpec> = KernelFamily::ALL
        .iter()
        .map(|&f| KernelSpec::new(f, 1.0, 0.1))
        .collect::<Result<_, _>>()?;
    for r in linspace(0.0, 0.3, 7) {
        let row: Vec<String> = specs.iter().map(|s| format!("{:10.6}", s.eval_distance(r))).collect();
        println!("{r:6.3} {}", row.join(" "));
    }

    // Rougher kernels wiggle more: count sign changes of the first difference.
    let grid: Vec<Vec<f64>> = linspace(0.0, 1.0, 400).into_iter().map(|x| vec![x]).collect();
    for spec in &specs {
        let f = sample_prior_function(spec, &MeanSpec::zero(), &grid, 7)?;
        let turns = f
            .windows(3)
            .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
            .count();
        println!("{}: prior draw has {turns} turning points on 400 grid points", spec.family());
    }
    Ok(())
}
