//! The experiment pipeline: synthesize, fit the candidate, predict the
//! held-out points, validate, persist.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{self, Dataset, FittedGP, Prediction, TrainOptions};
use crate::kernels::{KernelFamily, KernelSpec, MeanSpec};
use crate::synth::{ExperimentGenerator, SyntheticExperiment};
use crate::validation::{validate, ValidationReport};

use super::config::{ExperimentConfig, TrainMode};
use super::io::{self, write_text};
use super::kv;
use super::svg;

// Keeps the training restarts' random streams apart from the synthesis streams
// that share the replicate seed.
const TRAIN_SEED_SALT: u64 = 0x7472_6169_6e5f_7264;

/// A candidate model ready to be conditioned on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModel {
    pub kernel: KernelSpec,
    pub mean: MeanSpec,
    /// Homoscedastic noise variance added to every observation's own.
    pub extra_noise_variance: f64,
    pub train_mode: TrainMode,
    pub train_log_likelihood: f64,
    pub hit_bound: bool,
}

impl CandidateModel {
    pub fn to_text(&self, header: &str) -> String {
        let entries = [
            ("kernel_family", self.kernel.family().to_string()),
            ("signal_variance", self.kernel.signal_variance().to_string()),
            ("length_scale", self.kernel.length_scale().to_string()),
            ("mean_constant", self.mean.constant.to_string()),
            ("extra_noise_variance", self.extra_noise_variance.to_string()),
            ("train_mode", self.train_mode.to_string()),
            ("train_log_likelihood", self.train_log_likelihood.to_string()),
            ("hit_bound", self.hit_bound.to_string()),
        ];
        format!("{header}{}", kv::format(entries.iter().map(|(k, v)| (*k, v.as_str()))))
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let entries = kv::parse(text).map_err(bad)?;
        let get = |key: &str| kv::lookup(&entries, key).ok_or_else(|| bad(format!("missing key `{key}`")));
        let num = |key: &str| -> Result<f64> {
            let v = get(key)?;
            v.parse().map_err(|_| bad(format!("`{v}` is not a number for `{key}`")))
        };
        let family: KernelFamily = get("kernel_family")?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let kernel = KernelSpec::new(family, num("signal_variance")?, num("length_scale")?)
            .map_err(|e| bad(e.to_string()))?;
        let extra = match kv::lookup(&entries, "extra_noise_variance") {
            Some(_) => num("extra_noise_variance")?,
            None => 0.0,
        };
        if !(extra >= 0.0 && extra.is_finite()) {
            return Err(bad("extra_noise_variance must be non-negative".into()));
        }
        Ok(CandidateModel {
            kernel,
            mean: MeanSpec::constant(num("mean_constant")?),
            extra_noise_variance: extra,
            train_mode: match kv::lookup(&entries, "train_mode") {
                Some(m) => m.parse().map_err(|e: Error| bad(e.to_string()))?,
                None => TrainMode::FixExplicit,
            },
            train_log_likelihood: match kv::lookup(&entries, "train_log_likelihood") {
                Some(_) => num("train_log_likelihood")?,
                None => f64::NAN,
            },
            hit_bound: kv::lookup(&entries, "hit_bound") == Some("true"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        CandidateModel::parse(path, &io::read_text(path)?)
    }

    /// Conditions the model on `train`.
    pub fn condition(&self, train: &Dataset) -> Result<FittedGP> {
        let data = if self.extra_noise_variance > 0.0 {
            train.with_added_noise(self.extra_noise_variance)?
        } else {
            train.clone()
        };
        gp::fit(self.kernel, self.mean, data)
    }

    /// Predictive distribution of the *observed* test values: the latent
    /// covariance plus the test points' noise (and any trained extra noise).
    pub fn predict_observations(&self, fitted: &FittedGP, test: &Dataset) -> Result<Prediction> {
        let latent = fitted.predict(test.inputs())?;
        let noise: Vec<f64> = test
            .noise_variances()
            .iter()
            .map(|v| v + self.extra_noise_variance)
            .collect();
        latent.with_observation_noise(&noise)
    }
}

/// Builds the candidate model for one training set according to the config's
/// `train_mode`.
pub fn fit_candidate(cfg: &ExperimentConfig, train: &Dataset, seed: u64) -> Result<CandidateModel> {
    let mean = MeanSpec::constant(cfg.candidate_mean);
    let fixed = |kernel: KernelSpec, mode: TrainMode| -> Result<CandidateModel> {
        Ok(CandidateModel {
            kernel,
            mean,
            extra_noise_variance: 0.0,
            train_mode: mode,
            train_log_likelihood: gp::log_marginal_likelihood(&kernel, &mean, train)?,
            hit_bound: false,
        })
    };
    match cfg.train_mode {
        TrainMode::FixAtTruth => fixed(
            KernelSpec::new(cfg.candidate_kernel, cfg.truth_signal_variance, cfg.truth_length_scale)?,
            TrainMode::FixAtTruth,
        ),
        TrainMode::FixExplicit => fixed(
            KernelSpec::new(cfg.candidate_kernel, cfg.candidate_signal_variance, cfg.candidate_length_scale)?,
            TrainMode::FixExplicit,
        ),
        TrainMode::TrainMle => {
            let outcome = gp::train(
                cfg.candidate_kernel,
                &mean,
                train,
                &TrainOptions {
                    restarts: cfg.train_restarts,
                    seed: seed ^ TRAIN_SEED_SALT,
                    train_noise: cfg.train_noise,
                },
            )?;
            Ok(CandidateModel {
                kernel: outcome.kernel,
                mean,
                extra_noise_variance: outcome.noise_variance.unwrap_or(0.0),
                train_mode: TrainMode::TrainMle,
                train_log_likelihood: outcome.log_likelihood,
                hit_bound: outcome.hit_bound,
            })
        }
    }
}

/// Everything produced by one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateRun {
    pub replicate: usize,
    pub seed: u64,
    pub experiment: SyntheticExperiment,
    pub model: CandidateModel,
    pub fitted: FittedGP,
    pub prediction: Prediction,
    pub report: ValidationReport,
}

pub fn run_replicate(cfg: &ExperimentConfig, generator: &ExperimentGenerator, replicate: usize) -> Result<ReplicateRun> {
    let seed = cfg.replicate_seed(replicate);
    let experiment = generator.generate(seed)?;
    let model = fit_candidate(cfg, &experiment.train_set, seed)?;
    let fitted = model.condition(&experiment.train_set)?;
    let prediction = model.predict_observations(&fitted, &experiment.test_set)?;
    let report = validate(&prediction, experiment.test_set.values(), &cfg.grid())?;
    Ok(ReplicateRun {
        replicate,
        seed,
        experiment,
        model,
        fitted,
        prediction,
        report,
    })
}

/// One row of the summary table. Failed replicates carry NaN metrics and
/// the error message.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub uniform_coverage: f64,
    pub train_log_likelihood: f64,
    pub signal_variance: f64,
    pub length_scale: f64,
    pub error: Option<String>,
}

impl ReplicateResult {
    pub fn from_run(run: &ReplicateRun) -> Self {
        let r = &run.report;
        ReplicateResult {
            replicate: run.replicate,
            seed: run.seed,
            chi2: r.mahalanobis,
            dof: r.dof,
            p_value: r.p_value,
            a_hat: r.beta_fit.a_hat,
            b_hat: r.beta_fit.b_hat,
            uniform_coverage: r.uniform_coverage,
            train_log_likelihood: run.model.train_log_likelihood,
            signal_variance: run.model.kernel.signal_variance(),
            length_scale: run.model.kernel.length_scale(),
            error: None,
        }
    }

    pub fn failed(replicate: usize, seed: u64, error: &Error) -> Self {
        ReplicateResult {
            replicate,
            seed,
            chi2: f64::NAN,
            dof: 0,
            p_value: f64::NAN,
            a_hat: f64::NAN,
            b_hat: f64::NAN,
            uniform_coverage: f64::NAN,
            train_log_likelihood: f64::NAN,
            signal_variance: f64::NAN,
            length_scale: f64::NAN,
            error: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Outcome of a multi-replicate run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub results: Vec<ReplicateResult>,
    pub failures: usize,
}

impl RunSummary {
    fn new(results: Vec<ReplicateResult>) -> Self {
        let failures = results.iter().filter(|r| !r.is_ok()).count();
        RunSummary { results, failures }
    }

    /// More than half of the replicates failed.
    pub fn majority_failed(&self) -> bool {
        2 * self.failures > self.results.len()
    }

    pub fn successes(&self) -> impl Iterator<Item = &ReplicateResult> {
        self.results.iter().filter(|r| r.is_ok())
    }

    fn check(self) -> Result<Self> {
        if self.majority_failed() {
            return Err(Error::ReplicateFailures {
                failed: self.failures,
                total: self.results.len(),
            });
        }
        Ok(self)
    }
}

/// Runs every replicate in memory and returns the summary rows in
/// replicate order. Nothing is written.
pub fn replicate_results(cfg: &ExperimentConfig) -> Result<Vec<ReplicateResult>> {
    cfg.validate()?;
    let generator = ExperimentGenerator::new(cfg.synth_config()?)?;
    Ok((0..cfg.n_replicates)
        .into_par_iter()
        .map(|i| match run_replicate(cfg, &generator, i) {
            Ok(run) => ReplicateResult::from_run(&run),
            Err(e) => ReplicateResult::failed(i, cfg.replicate_seed(i), &e),
        })
        .collect())
}

/// Header lines embedded in every data file of a run.
pub fn file_header(cfg: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    let mut text = cfg.comment_block("# ");
    for (k, v) in extra {
        text.push_str(&format!("# {k} = {v}\n"));
    }
    text
}

fn svg_metadata(cfg: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    file_header(cfg, extra)
        .lines()
        .map(|l| format!("{}\n", l.trim_start_matches("# ")))
        .collect()
}

/// Writes the timestamped metadata file; the only output that differs
/// between identical runs.
pub fn write_metadata(dir: &Path, command: &str) -> Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = kv::format([
        ("command", command),
        ("version", env!("CARGO_PKG_VERSION")),
        ("created_unix_seconds", now.to_string().as_str()),
    ]);
    write_text(&dir.join("metadata.txt"), &text)
}

pub fn replicate_dir(cfg: &ExperimentConfig, replicate: usize) -> PathBuf {
    cfg.output_dir.join(format!("replicate_{replicate:04}"))
}

/// Writes all per-replicate artifacts into [`replicate_dir`].
pub fn persist_replicate(cfg: &ExperimentConfig, run: &ReplicateRun) -> Result<()> {
    let dir = replicate_dir(cfg, run.replicate);
    let extra = [("replicate", run.replicate.to_string()), ("seed", run.seed.to_string())];
    let header = file_header(cfg, &extra);
    let exp = &run.experiment;
    write_text(&dir.join("train.csv"), &io::dataset_csv(&exp.train_set, &header))?;
    write_text(&dir.join("test.csv"), &io::dataset_csv(&exp.test_set, &header))?;
    write_text(&dir.join("truth.csv"), &io::truth_csv(&exp.truth, &header))?;
    write_text(&dir.join("model.txt"), &run.model.to_text(&header))?;
    persist_report(&dir, &run.report, &header, &svg_metadata(cfg, &extra))?;
    match svg::emit_fit_plot(
        &run.fitted,
        &exp.truth,
        &exp.train_set,
        &exp.test_set,
        &dir.join("fit.svg"),
        &svg_metadata(cfg, &extra),
    ) {
        Ok(_) | Err(Error::UnsupportedPlot(_)) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Report text, p_k histogram, posterior CSV and heatmap.
pub fn persist_report(dir: &Path, report: &ValidationReport, header: &str, metadata: &str) -> Result<()> {
    write_text(&dir.join("report.txt"), &io::report_text(report, header))?;
    io::emit_pk_histogram(report, &dir.join("pk_histogram.csv"), header)?;
    let mle = (!report.beta_fit.is_degenerate()).then_some((report.beta_fit.a_hat, report.beta_fit.b_hat));
    svg::emit_posterior_heatmap(
        &report.posterior,
        mle,
        &dir.join("posterior.csv"),
        &dir.join("posterior.svg"),
        metadata,
    )?;
    Ok(())
}

fn write_run_files(cfg: &ExperimentConfig, results: &[ReplicateResult], command: &str) -> Result<()> {
    let header = file_header(cfg, &[]);
    write_text(&cfg.output_dir.join("config.txt"), &cfg.to_text())?;
    write_text(&cfg.output_dir.join("summary.csv"), &io::summary_csv(results, &header))?;
    write_metadata(&cfg.output_dir, command)
}

/// Full experiment: every replicate is persisted under its own directory,
/// plus `config.txt`, `summary.csv` and `metadata.txt` at the top level.
///
/// A failing replicate becomes a failure row. I/O errors abort the run.
/// Returns [`Error::ReplicateFailures`] when more than half failed; the
/// summary is written either way.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let generator = ExperimentGenerator::new(cfg.synth_config()?)?;
    let results = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|i| match run_replicate(cfg, &generator, i) {
            Ok(run) => {
                persist_replicate(cfg, &run)?;
                Ok(ReplicateResult::from_run(&run))
            }
            Err(e) => Ok(ReplicateResult::failed(i, cfg.replicate_seed(i), &e)),
        })
        .collect::<Result<Vec<_>>>()?;
    write_run_files(cfg, &results, "run")?;
    RunSummary::new(results).check()
}

/// Many replicates, summary only.
pub fn replicate_study(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let results = replicate_results(cfg)?;
    write_run_files(cfg, &results, "replicate-study")?;
    RunSummary::new(results).check()
}
