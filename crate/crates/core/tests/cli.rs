use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

const SMALL: [(&str, &str); 5] = [
    ("n_train", "15"),
    ("n_test", "10"),
    ("grid_points", "100"),
    ("posterior_resolution", "60"),
    ("train_restarts", "2"),
];

fn kernval(args: &[&str], extra: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kernval"));
    cmd.args(args);
    for (k, v) in SMALL.iter().chain(extra) {
        cmd.arg(format!("--{k}")).arg(v);
    }
    cmd.output().expect("spawn kernval")
}

/// Every file under `dir` except the timestamped metadata.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "metadata.txt" {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn generate_fit_validate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kernval(&["generate"], &[("output_dir", out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let train = dir.path().join("train.csv");
    let text = std::fs::read_to_string(&train).unwrap();
    assert!(text.contains("# noise_sd = 0.1\n"));
    assert!(text.contains("\nx,f,noise_sd\n"));

    let o = kernval(&["fit", "--train", train.to_str().unwrap()], &[("output_dir", out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = dir.path().join("model.txt");
    assert!(std::fs::read_to_string(&model).unwrap().contains("kernel_family = rbf"));

    let o = kernval(
        &[
            "validate",
            "--train",
            train.to_str().unwrap(),
            "--test",
            dir.path().join("test.csv").to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--truth",
            dir.path().join("truth.csv").to_str().unwrap(),
        ],
        &[("output_dir", out)],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.txt", "pk_histogram.csv", "posterior.csv", "posterior.svg", "fit.svg", "metadata.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("\ndof = 10\n"));
}

#[test]
fn run_is_byte_identical_when_repeated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let extra = [("output_dir", out), ("n_replicates", "3"), ("rng_seed", "42")];
    assert!(kernval(&["run"], &extra).status.success());
    let first = snapshot(dir.path());
    assert!(first.contains_key("summary.csv"));
    assert!(first.contains_key("replicate_0002/fit.svg"));
    assert!(kernval(&["run"], &extra).status.success());
    assert_eq!(first, snapshot(dir.path()));
}

#[test]
fn replicate_study_writes_one_row_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kernval(&["replicate-study"], &[("output_dir", out), ("n_replicates", "4")]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "replicate,seed,status,chi2_m,dof,p_value,a_hat,b_hat,uniform_coverage,train_log_likelihood,signal_variance,length_scale,error");
    assert_eq!(rows.len(), 5);
    assert!(!dir.path().join("replicate_0000").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# experiment\nnoise_sd = 0.3\nrng_seed = 5\n").unwrap();
    let out = dir.path().join("out");
    let o = kernval(
        &["generate", "--config", cfg.to_str().unwrap()],
        &[("output_dir", out.to_str().unwrap()), ("rng_seed", "6")],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("test.csv")).unwrap();
    assert!(text.contains("# noise_sd = 0.3\n"));
    assert!(text.contains("# rng_seed = 6\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "not_a_key = 1\n").unwrap();
    let code = |o: std::process::Output| o.status.code().unwrap();
    assert_eq!(code(kernval(&["generate", "--config", cfg.to_str().unwrap()], &[])), 1);
    assert_eq!(code(kernval(&["generate"], &[("n_test", "1")])), 1);
    assert_eq!(code(kernval(&["generate", "--bogus", "1"], &[])), 1);
    assert_eq!(code(kernval(&["fit", "--train", "/nonexistent/train.csv"], &[])), 3);
    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    let out = blocked.join("sub");
    assert_eq!(code(kernval(&["generate"], &[("output_dir", out.to_str().unwrap())])), 3);
}
