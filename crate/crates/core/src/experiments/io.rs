//! CSV and text artifacts.
//!
//! CSV schemas (column order is fixed):
//!
//! * dataset: `x, f, noise_sd` (inputs of dimension `d > 1` use `x0 .. x{d-1}`)
//! * truth: `x, f`
//! * p_k histogram: `bin_left, bin_right, density`
//! * posterior: `a, b, density`, rows ordered by `a` then `b`
//! * summary: see [`SUMMARY_COLUMNS`]
//!
//! Every file starts with `#` comment lines carrying the resolved config.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::kernels::Point;
use crate::synth::GriddedFunction;
use crate::validation::{pk_histogram, BetaPosterior, HistogramBin, ValidationReport};

use super::kv;
use super::runner::ReplicateResult;

/// Bins used for the reported p_k histogram.
pub const HISTOGRAM_BINS: usize = 10;

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "replicate",
    "seed",
    "status",
    "chi2_m",
    "dof",
    "p_value",
    "a_hat",
    "b_hat",
    "uniform_coverage",
    "train_log_likelihood",
    "signal_variance",
    "length_scale",
    "error",
];

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_string(header: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    w.write_record(columns).expect("in-memory csv write");
    for row in rows {
        w.write_record(row).expect("in-memory csv write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv");
    format!("{header}{body}")
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a `#`-commented CSV into its header and string rows.
fn read_csv(path: &Path, text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_error(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| parse_error(path, format!("row {line}: `{s}` is not a number")))
}

fn input_columns(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["x".to_string()]
    } else {
        (0..dim).map(|k| format!("x{k}")).collect()
    }
}

pub fn dataset_csv(data: &Dataset, header: &str) -> String {
    let mut columns = input_columns(data.dimension());
    columns.push("f".into());
    columns.push("noise_sd".into());
    let rows: Vec<Vec<String>> = (0..data.len())
        .map(|i| {
            let mut row: Vec<String> = data.inputs()[i].iter().map(f64::to_string).collect();
            row.push(data.values()[i].to_string());
            row.push(data.noise_variances()[i].sqrt().to_string());
            row
        })
        .collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    csv_string(header, &cols, &rows)
}

pub fn parse_dataset_csv(path: &Path, text: &str) -> Result<Dataset> {
    let (header, rows) = read_csv(path, text)?;
    if header.len() < 3 || header[header.len() - 2] != "f" || header[header.len() - 1] != "noise_sd" {
        return Err(parse_error(path, "expected columns `x, f, noise_sd`"));
    }
    let dim = header.len() - 2;
    if header[..dim] != input_columns(dim)[..] {
        return Err(parse_error(path, "unrecognised input column names"));
    }
    let (mut inputs, mut values, mut noise) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in rows.iter().enumerate() {
        let nums = row
            .iter()
            .map(|s| parse_f64(path, line + 1, s))
            .collect::<Result<Vec<f64>>>()?;
        inputs.push(nums[..dim].to_vec());
        values.push(nums[dim]);
        let sd = nums[dim + 1];
        if !(sd >= 0.0) {
            return Err(parse_error(path, format!("row {}: negative noise_sd", line + 1)));
        }
        noise.push(sd * sd);
    }
    Dataset::new(inputs, values, noise).map_err(|e| parse_error(path, e.to_string()))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset_csv(path, &read_text(path)?)
}

pub fn truth_csv(truth: &GriddedFunction, header: &str) -> String {
    let dim = truth.grid.first().map_or(1, Vec::len);
    let mut columns = input_columns(dim);
    columns.push("f".into());
    let rows: Vec<Vec<String>> = truth
        .grid
        .iter()
        .zip(&truth.values)
        .map(|(x, f)| {
            let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
            row.push(f.to_string());
            row
        })
        .collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    csv_string(header, &cols, &rows)
}

pub fn read_truth(path: &Path) -> Result<GriddedFunction> {
    let text = read_text(path)?;
    let (header, rows) = read_csv(path, &text)?;
    if header.len() < 2 || header[header.len() - 1] != "f" {
        return Err(parse_error(path, "expected columns `x, f`"));
    }
    let dim = header.len() - 1;
    let mut grid: Vec<Point> = Vec::new();
    let mut values = Vec::new();
    for (line, row) in rows.iter().enumerate() {
        let nums = row
            .iter()
            .map(|s| parse_f64(path, line + 1, s))
            .collect::<Result<Vec<f64>>>()?;
        grid.push(nums[..dim].to_vec());
        values.push(nums[dim]);
    }
    GriddedFunction::new(grid, values).map_err(|e| parse_error(path, e.to_string()))
}

pub fn histogram_csv(bins: &[HistogramBin], header: &str) -> String {
    let rows: Vec<Vec<String>> = bins
        .iter()
        .map(|b| vec![b.left.to_string(), b.right.to_string(), b.density.to_string()])
        .collect();
    csv_string(header, &["bin_left", "bin_right", "density"], &rows)
}

/// Writes the p_k histogram of a report.
pub fn emit_pk_histogram(report: &ValidationReport, path: &Path, header: &str) -> Result<Vec<HistogramBin>> {
    let bins = pk_histogram(&report.residuals.survival_probs, HISTOGRAM_BINS)?;
    write_text(path, &histogram_csv(&bins, header))?;
    Ok(bins)
}

pub fn posterior_csv(posterior: &BetaPosterior, header: &str) -> String {
    let mut rows = Vec::with_capacity(posterior.a_grid.len() * posterior.b_grid.len());
    for (i, a) in posterior.a_grid.iter().enumerate() {
        for (j, b) in posterior.b_grid.iter().enumerate() {
            rows.push(vec![
                a.to_string(),
                b.to_string(),
                posterior.log_density[(i, j)].exp().to_string(),
            ]);
        }
    }
    csv_string(header, &["a", "b", "density"], &rows)
}

/// `(a, b, density)` rows of a posterior CSV.
pub fn parse_posterior_csv(path: &Path, text: &str) -> Result<Vec<[f64; 3]>> {
    let (header, rows) = read_csv(path, text)?;
    if header != ["a", "b", "density"] {
        return Err(parse_error(path, "expected columns `a, b, density`"));
    }
    rows.iter()
        .enumerate()
        .map(|(line, row)| {
            if row.len() != 3 {
                return Err(parse_error(path, format!("row {}: expected 3 fields", line + 1)));
            }
            Ok([
                parse_f64(path, line + 1, &row[0])?,
                parse_f64(path, line + 1, &row[1])?,
                parse_f64(path, line + 1, &row[2])?,
            ])
        })
        .collect()
}

pub fn summary_csv(results: &[ReplicateResult], header: &str) -> String {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let num = |v: f64| v.to_string();
            vec![
                r.replicate.to_string(),
                r.seed.to_string(),
                if r.error.is_none() { "ok" } else { "failed" }.to_string(),
                num(r.chi2),
                r.dof.to_string(),
                num(r.p_value),
                num(r.a_hat),
                num(r.b_hat),
                num(r.uniform_coverage),
                num(r.train_log_likelihood),
                num(r.signal_variance),
                num(r.length_scale),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    csv_string(header, &SUMMARY_COLUMNS, &rows)
}

/// Structured text rendering of a validation report.
pub fn report_text(report: &ValidationReport, header: &str) -> String {
    let r = &report.residuals;
    let fit = &report.beta_fit;
    let g = &report.posterior.grid;
    let entries: Vec<(&str, String)> = vec![
        ("mahalanobis", report.mahalanobis.to_string()),
        ("dof", report.dof.to_string()),
        ("p_value", report.p_value.to_string()),
        ("reduced_rank", report.reduced_rank.to_string()),
        ("dropped_modes", r.dropped_modes.to_string()),
        ("eigenvalues", kv::join_floats(&r.eigenvalues)),
        ("rotated_residuals", kv::join_floats(&r.rotated_residuals)),
        ("standardized_residuals", kv::join_floats(&r.standardized)),
        ("survival_probs", kv::join_floats(&r.survival_probs)),
        ("a_hat", fit.a_hat.to_string()),
        ("b_hat", fit.b_hat.to_string()),
        ("beta_max_log_likelihood", fit.max_log_likelihood.to_string()),
        ("beta_fit_status", format!("{:?}", fit.status).to_lowercase()),
        ("posterior_a_min", g.a_min.to_string()),
        ("posterior_a_max", g.a_max.to_string()),
        ("posterior_b_min", g.b_min.to_string()),
        ("posterior_b_max", g.b_max.to_string()),
        ("posterior_resolution", g.resolution.to_string()),
        ("grid_widenings", report.grid_widenings.to_string()),
        ("uniform_coverage", report.uniform_coverage.to_string()),
    ];
    format!(
        "{header}{}",
        kv::format(entries.iter().map(|(k, v)| (*k, v.as_str())))
    )
}

/// Parses the `key = value` pairs of a report file.
pub fn parse_report_text(path: &Path, text: &str) -> Result<Vec<(String, String)>> {
    kv::parse(text).map_err(|m| parse_error(path, m))
}
