//! Experiment configuration: a flat `key = value` file plus overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec, MeanSpec};
use crate::synth::SynthConfig;
use crate::validation::GridConfig;

use super::kv;

/// How the candidate model's hyperparameters are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Maximize the marginal likelihood on the training set.
    TrainMle,
    /// Use the truth kernel's hyperparameters with the candidate family.
    FixAtTruth,
    /// Use `candidate_signal_variance` and `candidate_length_scale`.
    FixExplicit,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::TrainMle => "train_mle",
            TrainMode::FixAtTruth => "fix_at_truth",
            TrainMode::FixExplicit => "fix_explicit",
        })
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train_mle" => Ok(TrainMode::TrainMle),
            "fix_at_truth" => Ok(TrainMode::FixAtTruth),
            "fix_explicit" => Ok(TrainMode::FixExplicit),
            other => Err(Error::Config(format!("unknown train_mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub truth_kernel: KernelFamily,
    pub truth_signal_variance: f64,
    pub truth_length_scale: f64,
    pub truth_mean: f64,
    pub noise_sd: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub domain_min: f64,
    pub domain_max: f64,
    pub grid_points: usize,
    pub candidate_kernel: KernelFamily,
    pub candidate_mean: f64,
    pub train_mode: TrainMode,
    pub candidate_signal_variance: f64,
    pub candidate_length_scale: f64,
    pub train_restarts: usize,
    pub train_noise: bool,
    pub rng_seed: u64,
    pub n_replicates: usize,
    pub posterior_a_min: f64,
    pub posterior_a_max: f64,
    pub posterior_b_min: f64,
    pub posterior_b_max: f64,
    pub posterior_resolution: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = GridConfig::default();
        ExperimentConfig {
            truth_kernel: KernelFamily::Matern15,
            truth_signal_variance: 1.0,
            truth_length_scale: 0.1,
            truth_mean: 0.0,
            noise_sd: 0.1,
            n_train: 40,
            n_test: 80,
            domain_min: 0.0,
            domain_max: 1.0,
            grid_points: 512,
            candidate_kernel: KernelFamily::SquaredExponential,
            candidate_mean: 0.0,
            train_mode: TrainMode::TrainMle,
            candidate_signal_variance: 1.0,
            candidate_length_scale: 0.1,
            train_restarts: 5,
            train_noise: false,
            rng_seed: 1,
            n_replicates: 1,
            posterior_a_min: grid.a_min,
            posterior_a_max: grid.a_max,
            posterior_b_min: grid.b_min,
            posterior_b_max: grid.b_max,
            posterior_resolution: grid.resolution,
            output_dir: PathBuf::from("output"),
        }
    }
}

/// Every recognised key, in file order.
pub const CONFIG_KEYS: [&str; 25] = [
    "truth_kernel",
    "truth_signal_variance",
    "truth_length_scale",
    "truth_mean",
    "noise_sd",
    "n_train",
    "n_test",
    "domain_min",
    "domain_max",
    "grid_points",
    "candidate_kernel",
    "candidate_mean",
    "train_mode",
    "candidate_signal_variance",
    "candidate_length_scale",
    "train_restarts",
    "train_noise",
    "rng_seed",
    "n_replicates",
    "posterior_a_min",
    "posterior_a_max",
    "posterior_b_min",
    "posterior_b_max",
    "posterior_resolution",
    "output_dir",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{value}` for key `{key}` as a boolean"))),
    }
}

impl ExperimentConfig {
    /// Sets one key from its text form. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let kernel = |v: &str| v.parse::<KernelFamily>().map_err(|e| Error::Config(e.to_string()));
        match key {
            "truth_kernel" => self.truth_kernel = kernel(value)?,
            "truth_signal_variance" => self.truth_signal_variance = parse(key, value)?,
            "truth_length_scale" => self.truth_length_scale = parse(key, value)?,
            "truth_mean" => self.truth_mean = parse(key, value)?,
            "noise_sd" => self.noise_sd = parse(key, value)?,
            "n_train" => self.n_train = parse(key, value)?,
            "n_test" => self.n_test = parse(key, value)?,
            "domain_min" => self.domain_min = parse(key, value)?,
            "domain_max" => self.domain_max = parse(key, value)?,
            "grid_points" => self.grid_points = parse(key, value)?,
            "candidate_kernel" => self.candidate_kernel = kernel(value)?,
            "candidate_mean" => self.candidate_mean = parse(key, value)?,
            "train_mode" => self.train_mode = value.parse()?,
            "candidate_signal_variance" => self.candidate_signal_variance = parse(key, value)?,
            "candidate_length_scale" => self.candidate_length_scale = parse(key, value)?,
            "train_restarts" => self.train_restarts = parse(key, value)?,
            "train_noise" => self.train_noise = parse_bool(key, value)?,
            "rng_seed" => self.rng_seed = parse(key, value)?,
            "n_replicates" => self.n_replicates = parse(key, value)?,
            "posterior_a_min" => self.posterior_a_min = parse(key, value)?,
            "posterior_a_max" => self.posterior_a_max = parse(key, value)?,
            "posterior_b_min" => self.posterior_b_min = parse(key, value)?,
            "posterior_b_max" => self.posterior_b_max = parse(key, value)?,
            "posterior_resolution" => self.posterior_resolution = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Resolved `(key, value)` pairs in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.truth_kernel.to_string(),
            self.truth_signal_variance.to_string(),
            self.truth_length_scale.to_string(),
            self.truth_mean.to_string(),
            self.noise_sd.to_string(),
            self.n_train.to_string(),
            self.n_test.to_string(),
            self.domain_min.to_string(),
            self.domain_max.to_string(),
            self.grid_points.to_string(),
            self.candidate_kernel.to_string(),
            self.candidate_mean.to_string(),
            self.train_mode.to_string(),
            self.candidate_signal_variance.to_string(),
            self.candidate_length_scale.to_string(),
            self.train_restarts.to_string(),
            self.train_noise.to_string(),
            self.rng_seed.to_string(),
            self.n_replicates.to_string(),
            self.posterior_a_min.to_string(),
            self.posterior_a_max.to_string(),
            self.posterior_b_min.to_string(),
            self.posterior_b_max.to_string(),
            self.posterior_resolution.to_string(),
            self.output_dir.display().to_string(),
        ];
        CONFIG_KEYS.iter().copied().zip(values).collect()
    }

    /// Parses `key = value` text on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (key, value) in kv::parse(text).map_err(Error::Config)? {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_text(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        kv::format(self.entries().iter().map(|(k, v)| (*k, v.as_str())))
    }

    /// Config rendered as `# key = value` comment lines, for embedding in
    /// data files.
    pub fn comment_block(&self, prefix: &str) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{prefix}{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_test < 2 {
            return fail(format!("n_test must be at least 2 (got {})", self.n_test));
        }
        if self.n_train < 1 {
            return fail("n_train must be at least 1".into());
        }
        if self.n_replicates < 1 {
            return fail("n_replicates must be at least 1".into());
        }
        if self.train_restarts < 1 {
            return fail("train_restarts must be at least 1".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return fail(format!("noise_sd must be non-negative (got {})", self.noise_sd));
        }
        if !(self.domain_max > self.domain_min) {
            return fail("domain_max must exceed domain_min".into());
        }
        if self.n_train + self.n_test > self.grid_points {
            return fail(format!(
                "n_train + n_test ({}) exceeds grid_points ({})",
                self.n_train + self.n_test,
                self.grid_points
            ));
        }
        self.truth_kernel_spec().map_err(|e| Error::Config(e.to_string()))?;
        if self.train_mode == TrainMode::FixExplicit {
            KernelSpec::new(
                self.candidate_kernel,
                self.candidate_signal_variance,
                self.candidate_length_scale,
            )
            .map_err(|e| Error::Config(e.to_string()))?;
        }
        let g = self.grid();
        if !(g.a_min > 0.0 && g.b_min > 0.0 && g.a_max > g.a_min && g.b_max > g.b_min) {
            return fail("posterior grid bounds must be positive and increasing".into());
        }
        if g.resolution < crate::validation::MIN_RESOLUTION {
            return fail(format!(
                "posterior_resolution must be at least {}",
                crate::validation::MIN_RESOLUTION
            ));
        }
        Ok(())
    }

    pub fn truth_kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.truth_kernel, self.truth_signal_variance, self.truth_length_scale)
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            truth_kernel: self.truth_kernel_spec()?,
            truth_mean: MeanSpec::constant(self.truth_mean),
            domain: (self.domain_min, self.domain_max),
            grid_points: self.grid_points,
            noise_sd: self.noise_sd,
            n_train: self.n_train,
            n_test: self.n_test,
        })
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            a_min: self.posterior_a_min,
            a_max: self.posterior_a_max,
            b_min: self.posterior_b_min,
            b_max: self.posterior_b_max,
            resolution: self.posterior_resolution,
        }
    }

    /// Seed of replicate `index`.
    pub fn replicate_seed(&self, index: usize) -> u64 {
        self.rng_seed.wrapping_add(index as u64)
    }
}
