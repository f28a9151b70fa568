use std::path::Path;

use nalgebra::DMatrix;

use kernval::experiments::io::{parse_posterior_csv, read_text};
use kernval::experiments::svg::{emit_fit_plot, emit_posterior_heatmap, fit_plot_data, CREDIBLE_LEVELS};
use kernval::gp::{fit, Dataset};
use kernval::kernels::{points_1d, KernelFamily, KernelSpec, MeanSpec};
use kernval::synth::{linspace, GriddedFunction};
use kernval::validation::{BetaPosterior, GridConfig};
use kernval::Error;

fn series_labels(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).expect("valid SVG");
    doc.descendants()
        .filter(|n| n.has_tag_name("g") && n.attribute("class") == Some("series"))
        .map(|n| n.attribute("data-label").unwrap_or_default().to_string())
        .collect()
}

fn truth_on(lo: f64, hi: f64, n: usize) -> GriddedFunction {
    let xs = linspace(lo, hi, n);
    let values = xs.iter().map(|x| (6.0 * x).sin()).collect();
    GriddedFunction::new(points_1d(&xs), values).unwrap()
}

#[test]
fn fit_plot_has_five_labelled_series() {
    let dir = tempfile::tempdir().unwrap();
    let truth = truth_on(0.0, 1.0, 200);
    let xs = [0.1, 0.3, 0.55, 0.8];
    let train = Dataset::from_1d(&xs, xs.iter().map(|x| (6.0 * x).sin()).collect(), 0.1).unwrap();
    let test = Dataset::from_1d(&[0.2, 0.7], vec![0.9, -0.8], 0.1).unwrap();
    let kernel = KernelSpec::new(KernelFamily::Matern25, 1.0, 0.2).unwrap();
    let model = fit(kernel, MeanSpec::zero(), train.clone()).unwrap();
    let path = dir.path().join("fit.svg");
    emit_fit_plot(&model, &truth, &train, &test, &path, "seed = 1\n").unwrap();
    let labels = series_labels(&read_text(&path).unwrap());
    assert_eq!(
        labels,
        ["2-sigma band", "truth", "predictive mean", "training data", "test data"]
    );
}

#[test]
fn band_pinches_at_noiseless_training_points_and_reverts_far_away() {
    let s2: f64 = 2.0;
    let xs = [0.1, 0.4, 0.75];
    let train = Dataset::from_1d(&xs, vec![0.3, -0.2, 1.1], 0.0).unwrap();
    let kernel = KernelSpec::new(KernelFamily::SquaredExponential, s2, 0.2).unwrap();
    let model = fit(kernel, MeanSpec::zero(), train.clone()).unwrap();
    let truth = truth_on(-5.0, 6.0, 400);
    let test = Dataset::from_1d(&[0.5], vec![0.0], 0.0).unwrap();
    let data = fit_plot_data(&model, &truth, &train, &test).unwrap();
    for x in xs {
        let k = data.xs.iter().position(|v| *v == x).unwrap();
        assert!(data.band_half_width[k] < 1e-3 * s2.sqrt(), "x = {x}");
    }
    let far = data.xs.iter().position(|v| *v >= 5.5).unwrap();
    let want = 2.0 * s2.sqrt();
    assert!((data.band_half_width[far] - want).abs() < 0.02 * want);
}

#[test]
fn multidimensional_inputs_are_not_plotted() {
    let train = Dataset::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 1.0], vec![0.01; 2]).unwrap();
    let kernel = KernelSpec::new(KernelFamily::Matern15, 1.0, 0.5).unwrap();
    let model = fit(kernel, MeanSpec::zero(), train.clone()).unwrap();
    let truth = GriddedFunction::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0.0, 0.0]).unwrap();
    let path = Path::new("never-written.svg");
    let err = emit_fit_plot(&model, &truth, &train, &train, path, "").unwrap_err();
    assert!(matches!(err, Error::UnsupportedPlot(2)));
    assert!(!path.exists());
}

fn gaussian_bump() -> BetaPosterior {
    let grid = GridConfig {
        a_min: 0.05,
        a_max: 3.0,
        b_min: 0.05,
        b_max: 3.0,
        resolution: 300,
    };
    BetaPosterior::from_log_density_fn(&grid, |a, b| {
        let (u, v) = ((a - 1.2) / 0.25, (b - 0.9) / 0.35);
        -0.5 * (u * u + v * v - 0.6 * u * v)
    })
    .unwrap()
}

#[test]
fn contours_enclose_target_mass() {
    let dir = tempfile::tempdir().unwrap();
    let post = gaussian_bump();
    let summary = emit_posterior_heatmap(
        &post,
        Some((1.2, 0.9)),
        &dir.path().join("posterior.csv"),
        &dir.path().join("posterior.svg"),
        "n = 0\n",
    )
    .unwrap();
    assert!(!summary.flat);
    assert_eq!(summary.contours.len(), 2);
    for (contour, target) in summary.contours.iter().zip(CREDIBLE_LEVELS) {
        // Cell-sum oracle over the raw grid.
        let mut inside = 0.0;
        for (d, m) in post.log_density.iter().zip(post.cell_mass.iter()) {
            if *d > contour.log_density {
                inside += m;
            }
        }
        assert!((inside - target).abs() < 0.005, "{inside} vs {target}");
        assert!((contour.enclosed_mass - inside).abs() < 1e-12);
    }

    let svg = read_text(&dir.path().join("posterior.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let contours: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("contour"))
        .collect();
    assert_eq!(contours.len(), 2);
    for c in contours {
        let path = c.children().find(|n| n.has_tag_name("path")).unwrap();
        assert!(path.attribute("d").unwrap().starts_with('M'));
    }
    let markers: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("marker"))
        .filter_map(|n| n.attribute("data-label"))
        .collect();
    assert_eq!(markers, ["uniform (1, 1)", "MLE"]);

    let rows = parse_posterior_csv(Path::new("posterior.csv"), &read_text(&dir.path().join("posterior.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 300 * 300);
    assert_eq!((rows[1][0], rows[1][1]), (post.a_grid[0], post.b_grid[1]));
}

#[test]
fn flat_posterior_gets_annotation_and_no_contours() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridConfig {
        resolution: 4,
        ..GridConfig::default()
    };
    let post = BetaPosterior::from_cell_masses(&grid, DMatrix::from_element(4, 4, 1.0)).unwrap();
    let svg_path = dir.path().join("flat.svg");
    let summary = emit_posterior_heatmap(&post, None, &dir.path().join("flat.csv"), &svg_path, "").unwrap();
    assert!(summary.flat && summary.contours.is_empty());
    let svg = read_text(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc
        .descendants()
        .any(|n| n.attribute("class") == Some("annotation") && n.text().unwrap_or("").contains("no credible contours")));
    assert!(!doc.descendants().any(|n| n.attribute("class") == Some("contour")));
}
