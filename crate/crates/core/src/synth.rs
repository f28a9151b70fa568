//! Synthetic ground truth: functions drawn from a GP prior on a dense grid,
//! observed with Gaussian noise at randomly chosen grid points.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; independent
//! streams of the same seed drive the truth draw, the point selection and
//! the two noise draws.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::kernels::{self, KernelSpec, MeanSpec, Point};
use crate::linalg::{cholesky_with_jitter, JitteredCholesky};

const STREAM_TRUTH: u64 = 0;
const STREAM_SELECT: u64 = 1;
const STREAM_TRAIN_NOISE: u64 = 2;
const STREAM_TEST_NOISE: u64 = 3;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// A function tabulated on grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedFunction {
    pub grid: Vec<Point>,
    pub values: Vec<f64>,
}

impl GriddedFunction {
    pub fn new(grid: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        kernels::common_dimension(&grid)?;
        Ok(GriddedFunction { grid, values })
    }

    /// Value at `x`: exact on grid points, linearly interpolated between
    /// neighbouring grid points for 1-D grids.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        if let Some(i) = self.grid.iter().position(|g| g.as_slice() == x) {
            return Ok(self.values[i]);
        }
        let dim = self.grid.first().map_or(0, Vec::len);
        if dim != x.len() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        if dim != 1 {
            return Err(Error::InvalidInput(
                "off-grid observation points are only supported on 1-D grids".into(),
            ));
        }
        let x = x[0];
        let mut below: Option<(f64, f64)> = None;
        let mut above: Option<(f64, f64)> = None;
        for (g, &v) in self.grid.iter().zip(&self.values) {
            let g = g[0];
            if g <= x && below.is_none_or(|(b, _)| g > b) {
                below = Some((g, v));
            }
            if g >= x && above.is_none_or(|(a, _)| g < a) {
                above = Some((g, v));
            }
        }
        match (below, above) {
            (Some((x0, y0)), Some((x1, y1))) => {
                if x1 == x0 {
                    Ok(y0)
                } else {
                    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
                }
            }
            _ => Err(Error::InvalidInput(format!(
                "observation point {x} lies outside the grid hull"
            ))),
        }
    }
}

/// Cached Cholesky factor of a prior Gram matrix on a fixed grid, for
/// drawing many prior functions cheaply.
#[derive(Debug, Clone)]
pub struct PriorSampler {
    mean: MeanSpec,
    grid: Vec<Point>,
    chol: JitteredCholesky,
    lower: DMatrix<f64>,
}

impl PriorSampler {
    pub fn new(kernel: &KernelSpec, mean: MeanSpec, grid: Vec<Point>) -> Result<Self> {
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                if grid[i] == grid[j] {
                    return Err(Error::InvalidInput(format!(
                        "grid points {i} and {j} coincide"
                    )));
                }
            }
        }
        let gram = kernels::gram_symmetric(kernel, &grid)?;
        let chol = cholesky_with_jitter(&gram)?;
        let lower = chol.l();
        Ok(PriorSampler {
            mean,
            grid,
            chol,
            lower,
        })
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn jitter(&self) -> f64 {
        self.chol.jitter
    }

    /// One draw from `N(μ(grid), K(grid, grid) + jitter·I)`.
    pub fn sample(&self, seed: u64) -> Vec<f64> {
        self.sample_with(&mut rng_for(seed, STREAM_TRUTH))
    }

    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.grid.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)));
        let draw = &self.lower * z;
        self.grid
            .iter()
            .zip(draw.iter())
            .map(|(x, d)| self.mean.eval(x) + d)
            .collect()
    }
}

/// Draws one function from the GP prior on `grid`.
pub fn sample_prior_function(
    kernel: &KernelSpec,
    mean: &MeanSpec,
    grid: &[Point],
    rng_seed: u64,
) -> Result<Vec<f64>> {
    Ok(PriorSampler::new(kernel, *mean, grid.to_vec())?.sample(rng_seed))
}

/// Noisy observations of `truth` at `at`, with noise variance `noise_sd²`
/// recorded for every point.
pub fn make_observations(
    truth: &GriddedFunction,
    at: &[Point],
    noise_sd: f64,
    rng_seed: u64,
) -> Result<Dataset> {
    observe(truth, at, noise_sd, &mut rng_for(rng_seed, STREAM_TRAIN_NOISE))
}

fn observe(truth: &GriddedFunction, at: &[Point], noise_sd: f64, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise standard deviation must be finite and non-negative (got {noise_sd})"
        )));
    }
    let mut values = Vec::with_capacity(at.len());
    for x in at {
        let eps: f64 = StandardNormal.sample(rng);
        values.push(truth.value_at(x)? + noise_sd * eps);
    }
    Dataset::new(at.to_vec(), values, vec![noise_sd * noise_sd; at.len()])
}

/// The data-generating setup of a misspecification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub truth_kernel: KernelSpec,
    pub truth_mean: MeanSpec,
    pub domain: (f64, f64),
    pub grid_points: usize,
    pub noise_sd: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// A truth function with disjoint train and test observations.
#[derive(Debug, Clone)]
pub struct SyntheticExperiment {
    pub truth_kernel: KernelSpec,
    pub truth_mean: MeanSpec,
    pub truth: GriddedFunction,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train_set: Dataset,
    pub test_set: Dataset,
    pub rng_seed: u64,
}

/// Reusable generator: the prior factorization on the grid is computed once.
#[derive(Debug, Clone)]
pub struct ExperimentGenerator {
    config: SynthConfig,
    sampler: PriorSampler,
}

impl ExperimentGenerator {
    pub fn new(config: SynthConfig) -> Result<Self> {
        if config.n_train + config.n_test > config.grid_points {
            return Err(Error::InvalidInput(format!(
                "n_train + n_test = {} exceeds the {} grid points",
                config.n_train + config.n_test,
                config.grid_points
            )));
        }
        if !(config.domain.1 > config.domain.0) {
            return Err(Error::InvalidInput("domain upper bound must exceed lower bound".into()));
        }
        let grid = kernels::points_1d(&linspace(config.domain.0, config.domain.1, config.grid_points));
        let sampler = PriorSampler::new(&config.truth_kernel, config.truth_mean, grid)?;
        Ok(ExperimentGenerator { config, sampler })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn prior_jitter(&self) -> f64 {
        self.sampler.jitter()
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticExperiment> {
        let cfg = &self.config;
        let truth = GriddedFunction::new(self.sampler.grid.clone(), self.sampler.sample(seed))?;

        let picked = index::sample(
            &mut rng_for(seed, STREAM_SELECT),
            cfg.grid_points,
            cfg.n_train + cfg.n_test,
        )
        .into_vec();
        let mut train_indices = picked[..cfg.n_train].to_vec();
        let mut test_indices = picked[cfg.n_train..].to_vec();
        train_indices.sort_unstable();
        test_indices.sort_unstable();

        let points = |idx: &[usize]| -> Vec<Point> { idx.iter().map(|&i| truth.grid[i].clone()).collect() };
        let train_set = observe(
            &truth,
            &points(&train_indices),
            cfg.noise_sd,
            &mut rng_for(seed, STREAM_TRAIN_NOISE),
        )?;
        let test_set = observe(
            &truth,
            &points(&test_indices),
            cfg.noise_sd,
            &mut rng_for(seed, STREAM_TEST_NOISE),
        )?;
        Ok(SyntheticExperiment {
            truth_kernel: cfg.truth_kernel,
            truth_mean: cfg.truth_mean,
            truth,
            train_indices,
            test_indices,
            train_set,
            test_set,
            rng_seed: seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;

    fn m15(s2: f64, ell: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Matern15, s2, ell).unwrap()
    }

    #[test]
    fn single_point_prior_is_standard_normal() {
        let sampler = PriorSampler::new(&m15(1.0, 0.1), MeanSpec::zero(), vec![vec![0.5]]).unwrap();
        let draws: Vec<f64> = (0..10_000).map(|s| sampler.sample(s)[0]).collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn two_point_covariance_matches_kernel() {
        let k = m15(1.0, 0.3);
        let grid = kernels::points_1d(&[0.2, 0.5]);
        let sampler = PriorSampler::new(&k, MeanSpec::zero(), grid).unwrap();
        let n = 50_000;
        let pairs: Vec<(f64, f64)> = (0..n).map(|s| {
            let v = sampler.sample(s);
            (v[0], v[1])
        }).collect();
        let nf = n as f64;
        let (m0, m1) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / nf, b + y / nf));
        let cov = pairs.iter().map(|(x, y)| (x - m0) * (y - m1)).sum::<f64>() / (nf - 1.0);
        let expected = k.eval_distance(0.3);
        // se of a sample covariance: sqrt((σ₁²σ₂² + c²) / n)
        let se = ((1.0 + expected * expected) / nf).sqrt();
        assert!((cov - expected).abs() < 3.0 * se, "cov {cov} expected {expected}");
    }

    #[test]
    fn degenerate_prior_returns_mean() {
        let grid = kernels::points_1d(&linspace(0.0, 1.0, 50));
        let v = sample_prior_function(&m15(1e-12, 0.1), &MeanSpec::constant(2.0), &grid, 4).unwrap();
        assert!(v.iter().all(|x| (x - 2.0).abs() < 1e-5));
    }

    #[test]
    fn prior_draws_are_deterministic() {
        let grid = kernels::points_1d(&linspace(0.0, 1.0, 64));
        let a = sample_prior_function(&m15(1.0, 0.1), &MeanSpec::zero(), &grid, 9).unwrap();
        let b = sample_prior_function(&m15(1.0, 0.1), &MeanSpec::zero(), &grid, 9).unwrap();
        let c = sample_prior_function(&m15(1.0, 0.1), &MeanSpec::zero(), &grid, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn repeated_grid_points_rejected() {
        let grid = kernels::points_1d(&[0.0, 0.5, 0.5]);
        assert!(PriorSampler::new(&m15(1.0, 0.1), MeanSpec::zero(), grid).is_err());
    }

    #[test]
    fn observations_noiseless_limit_and_determinism() {
        let grid = kernels::points_1d(&linspace(0.0, 1.0, 11));
        let truth = GriddedFunction::new(grid.clone(), (0..11).map(|i| f64::from(i).sin()).collect()).unwrap();
        let d = make_observations(&truth, &grid, 1e-12, 1).unwrap();
        for (v, t) in d.values().iter().zip(&truth.values) {
            assert!((v - t).abs() < 1e-10);
        }
        let a = make_observations(&truth, &grid[2..5], 0.3, 8).unwrap();
        let b = make_observations(&truth, &grid[2..5], 0.3, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.noise_variances().iter().all(|&v| (v - 0.09).abs() < 1e-15));
    }

    #[test]
    fn off_grid_points_interpolate_and_outside_hull_fails() {
        let grid = kernels::points_1d(&[0.0, 1.0]);
        let truth = GriddedFunction::new(grid, vec![1.0, 3.0]).unwrap();
        assert!((truth.value_at(&[0.25]).unwrap() - 1.5).abs() < 1e-15);
        assert!(make_observations(&truth, &[vec![1.5]], 0.1, 0).is_err());
    }

    #[test]
    fn observation_noise_has_requested_sd() {
        let grid = kernels::points_1d(&[0.0]);
        let truth = GriddedFunction::new(grid.clone(), vec![4.0]).unwrap();
        let at = vec![vec![0.0]; 10_000];
        let d = make_observations(&truth, &at, 0.1, 21).unwrap();
        let n = d.len() as f64;
        let mean = d.values().iter().sum::<f64>() / n;
        let sd = (d.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 0.1).abs() < 0.005, "sd {sd}");
    }

    #[test]
    fn experiments_have_disjoint_train_and_test() {
        let cfg = SynthConfig {
            truth_kernel: m15(1.0, 0.1),
            truth_mean: MeanSpec::zero(),
            domain: (0.0, 1.0),
            grid_points: 512,
            noise_sd: 0.1,
            n_train: 40,
            n_test: 80,
        };
        let generator = ExperimentGenerator::new(cfg).unwrap();
        for seed in 0..20 {
            let e = generator.generate(seed).unwrap();
            assert_eq!(e.train_set.len(), 40);
            assert_eq!(e.test_set.len(), 80);
            assert!(e.train_indices.iter().all(|i| !e.test_indices.contains(i)));
            for (i, x) in e.train_indices.iter().zip(e.train_set.inputs()) {
                assert_eq!(&e.truth.grid[*i], x);
            }
        }
        let a = generator.generate(5).unwrap();
        let b = generator.generate(5).unwrap();
        assert_eq!(a.train_set, b.train_set);
        assert_eq!(a.test_set, b.test_set);
    }
}
