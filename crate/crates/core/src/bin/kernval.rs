//! Command-line front end for the experiment runner.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 numerical
//! failure (including a majority of failed replicates), 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use kernval::experiments::{self, commands, ExperimentConfig, RunSummary, CONFIG_KEYS};
use kernval::Error;

fn cli() -> Command {
    let mut cmd = Command::new("kernval")
        .about("GP kernel validation experiments")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value configuration file; --key value flags override it"),
        );
    for key in CONFIG_KEYS {
        cmd = cmd.arg(
            Arg::new(key)
                .long(key)
                .global(true)
                .value_name("VALUE")
                .help_heading("Configuration overrides"),
        );
    }
    let file = |name: &'static str, help: &'static str| {
        Arg::new(name).long(name).value_name("FILE").required(true).help(help)
    };
    cmd.subcommand(Command::new("generate").about("Synthesize one dataset (train, test, truth CSVs)"))
        .subcommand(
            Command::new("fit")
                .about("Fit the candidate model to a dataset file")
                .arg(file("train", "training dataset CSV")),
        )
        .subcommand(
            Command::new("validate")
                .about("Validate a model on held-out data")
                .arg(file("train", "training dataset CSV"))
                .arg(file("test", "test dataset CSV"))
                .arg(file("model", "model file written by `fit`"))
                .arg(
                    Arg::new("truth")
                        .long("truth")
                        .value_name("FILE")
                        .help("truth CSV; adds a fit plot"),
                ),
        )
        .subcommand(Command::new("run").about("Full experiment with per-replicate artifacts"))
        .subcommand(Command::new("replicate-study").about("Many replicates, summary CSV only"))
}

fn resolve_config(m: &ArgMatches) -> Result<ExperimentConfig, Error> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => ExperimentConfig::load(Path::new(path))?,
        None => ExperimentConfig::default(),
    };
    for key in CONFIG_KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn path_arg(m: &ArgMatches, name: &str) -> PathBuf {
    PathBuf::from(m.get_one::<String>(name).expect("required by clap"))
}

fn report_summary(summary: &RunSummary, cfg: &ExperimentConfig) {
    println!(
        "{} replicates, {} failed; summary in {}",
        summary.results.len(),
        summary.failures,
        cfg.output_dir.join("summary.csv").display()
    );
}

fn execute(m: &ArgMatches) -> Result<(), Error> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    let cfg = resolve_config(sub)?;
    match name {
        "generate" => {
            for path in commands::generate(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        "fit" => {
            let model = commands::fit(&cfg, &path_arg(sub, "train"))?;
            println!(
                "{} signal_variance = {} length_scale = {} (log likelihood {})",
                model.kernel.family(),
                model.kernel.signal_variance(),
                model.kernel.length_scale(),
                model.train_log_likelihood
            );
        }
        "validate" => {
            let truth = sub.get_one::<String>("truth").map(PathBuf::from);
            let report = commands::validate_files(
                &cfg,
                &path_arg(sub, "train"),
                &path_arg(sub, "test"),
                &path_arg(sub, "model"),
                truth.as_deref(),
            )?;
            println!(
                "chi2_M = {:.4} (dof {}), p = {:.4e}, Beta MLE = ({:.3}, {:.3}), coverage at (1,1) = {:.4}",
                report.mahalanobis,
                report.dof,
                report.p_value,
                report.beta_fit.a_hat,
                report.beta_fit.b_hat,
                report.uniform_coverage
            );
        }
        "run" => report_summary(&experiments::run_experiment(&cfg)?, &cfg),
        "replicate-study" => report_summary(&experiments::replicate_study(&cfg)?, &cfg),
        other => unreachable!("unknown subcommand {other}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
