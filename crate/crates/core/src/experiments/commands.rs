//! The single-step subcommands: generate, fit and validate, operating on files.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::synth::ExperimentGenerator;
use crate::validation::{validate, ValidationReport};

use super::config::ExperimentConfig;
use super::io::{self, write_text};
use super::runner::{self, file_header, CandidateModel};
use super::svg;

/// Synthesizes one experiment with `rng_seed` and writes `train.csv`,
/// `test.csv` and `truth.csv` into the output directory.
pub fn generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let generator = ExperimentGenerator::new(cfg.synth_config()?)?;
    let exp = generator.generate(cfg.rng_seed)?;
    let header = file_header(cfg, &[("seed", cfg.rng_seed.to_string())]);
    let dir = &cfg.output_dir;
    let files = [
        (dir.join("train.csv"), io::dataset_csv(&exp.train_set, &header)),
        (dir.join("test.csv"), io::dataset_csv(&exp.test_set, &header)),
        (dir.join("truth.csv"), io::truth_csv(&exp.truth, &header)),
    ];
    for (path, text) in &files {
        write_text(path, text)?;
    }
    runner::write_metadata(dir, "generate")?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Fits the candidate model to a dataset file and writes `model.txt`.
pub fn fit(cfg: &ExperimentConfig, train_path: &Path) -> Result<CandidateModel> {
    cfg.validate()?;
    let train = io::read_dataset(train_path)?;
    let model = runner::fit_candidate(cfg, &train, cfg.rng_seed)?;
    let header = file_header(cfg, &[("seed", cfg.rng_seed.to_string())]);
    write_text(&cfg.output_dir.join("model.txt"), &model.to_text(&header))?;
    runner::write_metadata(&cfg.output_dir, "fit")?;
    Ok(model)
}

/// Validates a model against a test file. Writes the report, p_k
/// histogram and posterior files, and the fit plot when a truth file is given.
pub fn validate_files(
    cfg: &ExperimentConfig,
    train_path: &Path,
    test_path: &Path,
    model_path: &Path,
    truth_path: Option<&Path>,
) -> Result<ValidationReport> {
    cfg.validate()?;
    let train = io::read_dataset(train_path)?;
    let test = io::read_dataset(test_path)?;
    let model = CandidateModel::load(model_path)?;
    let fitted = model.condition(&train)?;
    let prediction = model.predict_observations(&fitted, &test)?;
    let report = validate(&prediction, test.values(), &cfg.grid())?;

    let header = file_header(cfg, &[]);
    let metadata: String = header.lines().map(|l| format!("{}\n", l.trim_start_matches("# "))).collect();
    runner::persist_report(&cfg.output_dir, &report, &header, &metadata)?;
    if let Some(truth_path) = truth_path {
        let truth = io::read_truth(truth_path)?;
        svg::emit_fit_plot(&fitted, &truth, &train, &test, &cfg.output_dir.join("fit.svg"), &metadata)?;
    }
    runner::write_metadata(&cfg.output_dir, "validate")?;
    Ok(report)
}
