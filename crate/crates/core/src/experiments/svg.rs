//! Hand-rolled SVG figures: the fit plot and the Beta posterior heatmap.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gp::{Dataset, FittedGP};
use crate::kernels::points_1d;
use crate::synth::GriddedFunction;
use crate::validation::{BetaPosterior, UNIFORM_POINT};

use super::io::{posterior_csv, write_text};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// Credible levels drawn on the posterior heatmap.
pub const CREDIBLE_LEVELS: [f64; 2] = [0.683, 0.955];

/// Largest number of heatmap blocks per axis; finer grids are block-averaged.
const MAX_DISPLAY_CELLS: usize = 100;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn open_document(out: &mut String, metadata: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<metadata>\n{}</metadata>", escape(metadata));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/>"#,
        x1 - x0,
        y0 - y1
    );
    for t in nice_ticks(frame.x.0, frame.x.1) {
        let p = frame.px(t);
        let _ = writeln!(out, r#"<line x1="{p:.2}" y1="{y0:.2}" x2="{p:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{}</text>"#,
            y0 + 18.0,
            tick_label(t)
        );
    }
    for t in nice_ticks(frame.y.0, frame.y.1) {
        let p = frame.py(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{p:.2}" x2="{x0:.2}" y2="{p:.2}"/>"#, x0 - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">{}</text>"#,
            x0 - 8.0,
            p + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" stroke="none" fill="black" transform="rotate(-90 18 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(ylabel)
    );
    let _ = writeln!(out, "</g>");
}

fn legend_entry(out: &mut String, row: usize, label: &str, swatch: &str) {
    let x = WIDTH - MARGIN_RIGHT + 15.0;
    let y = MARGIN_TOP + 10.0 + 22.0 * row as f64;
    let _ = writeln!(out, r#"<g class="legend-entry" transform="translate({x:.2} {y:.2})">{swatch}"#);
    let _ = writeln!(out, r#"<text x="30" y="4">{}</text></g>"#, escape(label));
}

/// Data behind the fit plot, exposed for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPlotData {
    /// Abscissae of the mean curve and band: the truth grid plus the
    /// training inputs, sorted.
    pub xs: Vec<f64>,
    pub mean: Vec<f64>,
    /// `2 √(diag K_pred)` of the latent function at `xs`.
    pub band_half_width: Vec<f64>,
    pub truth: Vec<(f64, f64)>,
    /// `(x, f, noise_sd)`.
    pub train: Vec<(f64, f64, f64)>,
    pub test: Vec<(f64, f64, f64)>,
}

fn one_d(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            if p.len() == 1 {
                Ok(p[0])
            } else {
                Err(Error::UnsupportedPlot(p.len()))
            }
        })
        .collect()
}

fn observations(data: &Dataset) -> Result<Vec<(f64, f64, f64)>> {
    Ok(one_d(data.inputs())?
        .into_iter()
        .zip(data.values())
        .zip(data.noise_variances())
        .map(|((x, f), v)| (x, *f, v.sqrt()))
        .collect())
}

pub fn fit_plot_data(model: &FittedGP, truth: &GriddedFunction, train: &Dataset, test: &Dataset) -> Result<FitPlotData> {
    let truth_x = one_d(&truth.grid)?;
    let train_obs = observations(train)?;
    let test_obs = observations(test)?;
    let mut xs: Vec<f64> = truth_x.iter().copied().chain(train_obs.iter().map(|o| o.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let pred = model.predict(&points_1d(&xs))?;
    Ok(FitPlotData {
        mean: pred.mean.iter().copied().collect(),
        band_half_width: pred.variances().iter().map(|v| 2.0 * v.sqrt()).collect(),
        xs,
        truth: truth_x.into_iter().zip(truth.values.iter().copied()).collect(),
        train: train_obs,
        test: test_obs,
    })
}

fn polyline(frame: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

const TRUTH_COLOR: &str = "#222222";
const MODEL_COLOR: &str = "#1f9fbf";
const TRAIN_COLOR: &str = "#d62728";
const TEST_COLOR: &str = "#2ca02c";

pub fn fit_plot_svg(data: &FitPlotData, metadata: &str) -> String {
    let lo_hi = |vals: &mut dyn Iterator<Item = f64>| {
        vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let xr = lo_hi(&mut data.xs.iter().copied().chain(data.test.iter().map(|o| o.0)));
    let yr = lo_hi(
        &mut data
            .mean
            .iter()
            .zip(&data.band_half_width)
            .flat_map(|(m, h)| [m - h, m + h])
            .chain(data.truth.iter().map(|t| t.1))
            .chain(data.train.iter().flat_map(|o| [o.1 - o.2, o.1 + o.2]))
            .chain(data.test.iter().map(|o| o.1)),
    );
    let pad = 0.05 * (yr.1 - yr.0).max(1e-12);
    let frame = Frame::new(xr, (yr.0 - pad, yr.1 + pad));

    let mut out = String::new();
    open_document(&mut out, metadata);

    let upper = data.xs.iter().zip(data.mean.iter().zip(&data.band_half_width)).map(|(x, (m, h))| (*x, m + h));
    let lower: Vec<(f64, f64)> = data
        .xs
        .iter()
        .zip(data.mean.iter().zip(&data.band_half_width))
        .map(|(x, (m, h))| (*x, m - h))
        .rev()
        .collect();
    let _ = writeln!(out, r#"<g class="series" data-label="2-sigma band">"#);
    let _ = writeln!(
        out,
        r#"<polygon points="{} {}" fill="{MODEL_COLOR}" fill-opacity="0.25" stroke="none"/>"#,
        polyline(&frame, upper),
        polyline(&frame, lower.into_iter())
    );
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="series" data-label="truth">"#);
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{TRUTH_COLOR}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
        polyline(&frame, data.truth.iter().copied())
    );
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="series" data-label="predictive mean">"#);
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{MODEL_COLOR}" stroke-width="2"/>"#,
        polyline(&frame, data.xs.iter().copied().zip(data.mean.iter().copied()))
    );
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="series" data-label="training data">"#);
    for &(x, f, sd) in &data.train {
        let (px, py) = (frame.px(x), frame.py(f));
        if sd > 0.0 {
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{TRAIN_COLOR}"/>"#,
                frame.py(f - sd),
                frame.py(f + sd)
            );
        }
        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{TRAIN_COLOR}"/>"#);
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="series" data-label="test data">"#);
    for &(x, f, _) in &data.test {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="none" stroke="{TEST_COLOR}"/>"#,
            frame.px(x) - 2.5,
            frame.py(f) - 2.5
        );
    }
    let _ = writeln!(out, "</g>");

    axes(&mut out, &frame, "x", "f(x)");
    legend_entry(
        &mut out,
        0,
        "truth",
        &format!(r#"<line x1="0" y1="0" x2="24" y2="0" stroke="{TRUTH_COLOR}" stroke-dasharray="6 4"/>"#),
    );
    legend_entry(
        &mut out,
        1,
        "predictive mean",
        &format!(r#"<line x1="0" y1="0" x2="24" y2="0" stroke="{MODEL_COLOR}" stroke-width="2"/>"#),
    );
    legend_entry(
        &mut out,
        2,
        "2-sigma band",
        &format!(r#"<rect x="0" y="-6" width="24" height="12" fill="{MODEL_COLOR}" fill-opacity="0.25"/>"#),
    );
    legend_entry(
        &mut out,
        3,
        "training data",
        &format!(r#"<circle cx="12" cy="0" r="3" fill="{TRAIN_COLOR}"/>"#),
    );
    legend_entry(
        &mut out,
        4,
        "test data",
        &format!(r#"<rect x="9.5" y="-2.5" width="5" height="5" fill="none" stroke="{TEST_COLOR}"/>"#),
    );
    out.push_str("</svg>\n");
    out
}

/// Renders the fit plot for 1-D data. Multi-dimensional inputs give
/// [`Error::UnsupportedPlot`] without touching `path`.
pub fn emit_fit_plot(
    model: &FittedGP,
    truth: &GriddedFunction,
    train: &Dataset,
    test: &Dataset,
    path: &Path,
    metadata: &str,
) -> Result<FitPlotData> {
    let data = fit_plot_data(model, truth, train, test)?;
    write_text(path, &fit_plot_svg(&data, metadata))?;
    Ok(data)
}

/// One highest-density credible contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleContour {
    pub level: f64,
    /// Log-density at which the contour is drawn; cells above it form the region.
    pub log_density: f64,
    /// Posterior mass of the cells inside the region.
    pub enclosed_mass: f64,
}

/// Contours at [`CREDIBLE_LEVELS`]. Empty for a flat posterior.
///
/// Each region is the smallest set of densest cells holding at least the
/// target mass; the contour sits halfway between the last included and the
/// first excluded cell density.
pub fn credible_contours(posterior: &BetaPosterior) -> Vec<CredibleContour> {
    if posterior.is_flat() {
        return Vec::new();
    }
    let mut cells: Vec<(f64, f64)> = posterior
        .log_density
        .iter()
        .copied()
        .zip(posterior.cell_mass.iter().copied())
        .collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    CREDIBLE_LEVELS
        .iter()
        .filter_map(|&level| {
            let mut acc = 0.0;
            for (k, &(d, m)) in cells.iter().enumerate() {
                acc += m;
                // Ties stay together so the region is a density superlevel set.
                let next = cells.get(k + 1).map(|c| c.0);
                if acc >= level && next != Some(d) {
                    let below = next.unwrap_or(f64::NEG_INFINITY);
                    let cut = if below.is_finite() { 0.5 * (d + below) } else { d - 1.0 };
                    return Some(CredibleContour {
                        level,
                        log_density: cut,
                        enclosed_mass: posterior.mass_above(cut),
                    });
                }
            }
            None
        })
        .collect()
}

/// Marching squares over cell-centre values. Returns segments in
/// fractional `(row, column)` index coordinates.
pub fn marching_squares(values: &DMatrix<f64>, level: f64) -> Vec<[(f64, f64); 2]> {
    let (nr, nc) = values.shape();
    let mut segments = Vec::new();
    if nr < 2 || nc < 2 {
        return segments;
    }
    let frac = |a: f64, b: f64| {
        let t = (level - a) / (b - a);
        if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 }
    };
    for i in 0..nr - 1 {
        for j in 0..nc - 1 {
            // Corners counter-clockwise from (i, j).
            let v = [values[(i, j)], values[(i + 1, j)], values[(i + 1, j + 1)], values[(i, j + 1)]];
            let corner = [(i as f64, j as f64), ((i + 1) as f64, j as f64), ((i + 1) as f64, (j + 1) as f64), (i as f64, (j + 1) as f64)];
            let inside: Vec<bool> = v.iter().map(|x| *x > level).collect();
            let edge_point = |e: usize| {
                let (a, b) = (e, (e + 1) % 4);
                let t = frac(v[a], v[b]);
                (
                    corner[a].0 + t * (corner[b].0 - corner[a].0),
                    corner[a].1 + t * (corner[b].1 - corner[a].1),
                )
            };
            // Edges whose endpoints straddle the level, in order around the square.
            let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push([edge_point(crossing[0]), edge_point(crossing[1])]),
                4 => {
                    // Saddle: resolve with the mean of the four corners.
                    let centre_inside = v.iter().filter(|x| x.is_finite()).sum::<f64>() / 4.0 > level;
                    let pairs = if centre_inside == inside[0] { [(0, 1), (2, 3)] } else { [(3, 0), (1, 2)] };
                    for (a, b) in pairs {
                        segments.push([edge_point(a), edge_point(b)]);
                    }
                }
                _ => {}
            }
        }
    }
    segments
}

fn viridis(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Summary of what the heatmap shows.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSummary {
    pub contours: Vec<CredibleContour>,
    pub flat: bool,
}

pub fn posterior_heatmap_svg(posterior: &BetaPosterior, mle: Option<(f64, f64)>, metadata: &str) -> (String, HeatmapSummary) {
    let g = &posterior.grid;
    let frame = Frame::new((g.a_min, g.a_max), (g.b_min, g.b_max));
    let (na, nb) = posterior.resolution();
    let mut out = String::new();
    open_document(&mut out, metadata);

    let density = posterior.log_density.map(f64::exp);
    let peak = density.max();
    let block_a = na.div_ceil(MAX_DISPLAY_CELLS);
    let block_b = nb.div_ceil(MAX_DISPLAY_CELLS);
    let da = (g.a_max - g.a_min) / na as f64;
    let db = (g.b_max - g.b_min) / nb as f64;
    let _ = writeln!(out, r#"<g class="heatmap" shape-rendering="crispEdges">"#);
    for i0 in (0..na).step_by(block_a) {
        for j0 in (0..nb).step_by(block_b) {
            let (i1, j1) = ((i0 + block_a).min(na), (j0 + block_b).min(nb));
            let view = density.view((i0, j0), (i1 - i0, j1 - j0));
            let avg = view.sum() / view.len() as f64;
            let (a0, a1) = (g.a_min + i0 as f64 * da, g.a_min + i1 as f64 * da);
            let (b0, b1) = (g.b_min + j0 as f64 * db, g.b_min + j1 as f64 * db);
            let (x, y) = (frame.px(a0), frame.py(b1));
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.px(a1) - x + 0.3,
                frame.py(b0) - y + 0.3,
                viridis(if peak > 0.0 { avg / peak } else { 0.0 })
            );
        }
    }
    let _ = writeln!(out, "</g>");

    let contours = credible_contours(posterior);
    let to_xy = |(r, c): (f64, f64)| (frame.px(g.a_min + (r + 0.5) * da), frame.py(g.b_min + (c + 0.5) * db));
    for (k, contour) in contours.iter().enumerate() {
        let dash = if k == 0 { "" } else { r#" stroke-dasharray="5 3""# };
        let _ = writeln!(
            out,
            r#"<g class="contour" data-level="{}" data-enclosed-mass="{:.6}">"#,
            contour.level, contour.enclosed_mass
        );
        let mut d = String::new();
        for [p, q] in marching_squares(&posterior.log_density, contour.log_density) {
            let ((x0, y0), (x1, y1)) = (to_xy(p), to_xy(q));
            let _ = write!(d, "M{x0:.2} {y0:.2}L{x1:.2} {y1:.2}");
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="white" stroke-width="1.5"{dash}/>"#);
        let _ = writeln!(out, "</g>");
    }
    let flat = contours.is_empty();
    if flat {
        let _ = writeln!(
            out,
            r#"<text class="annotation" x="{:.2}" y="{:.2}" text-anchor="middle" fill="white">posterior is flat: no credible contours</text>"#,
            0.5 * (frame.px(g.a_min) + frame.px(g.a_max)),
            0.5 * (frame.py(g.b_min) + frame.py(g.b_max))
        );
    }

    let (ux, uy) = (frame.px(UNIFORM_POINT.0), frame.py(UNIFORM_POINT.1));
    let _ = writeln!(
        out,
        r#"<g class="marker" data-label="uniform (1, 1)" stroke="red" stroke-width="2"><line x1="{:.2}" y1="{uy:.2}" x2="{:.2}" y2="{uy:.2}"/><line x1="{ux:.2}" y1="{:.2}" x2="{ux:.2}" y2="{:.2}"/></g>"#,
        ux - 7.0,
        ux + 7.0,
        uy - 7.0,
        uy + 7.0
    );
    if let Some((a, b)) = mle {
        let _ = writeln!(
            out,
            r#"<g class="marker" data-label="MLE"><circle cx="{:.2}" cy="{:.2}" r="4" fill="black" stroke="white"/></g>"#,
            frame.px(a),
            frame.py(b)
        );
    }
    axes(&mut out, &frame, "a", "b");
    legend_entry(&mut out, 0, "(1, 1) uniform", r#"<line x1="5" y1="0" x2="19" y2="0" stroke="red" stroke-width="2"/><line x1="12" y1="-7" x2="12" y2="7" stroke="red" stroke-width="2"/>"#);
    legend_entry(&mut out, 1, "Beta MLE", r#"<circle cx="12" cy="0" r="4" fill="black"/>"#);
    legend_entry(&mut out, 2, "68.3% region", r#"<line x1="0" y1="0" x2="24" y2="0" stroke="gray" stroke-width="1.5"/>"#);
    legend_entry(&mut out, 3, "95.5% region", r#"<line x1="0" y1="0" x2="24" y2="0" stroke="gray" stroke-width="1.5" stroke-dasharray="5 3"/>"#);
    out.push_str("</svg>\n");
    (out, HeatmapSummary { contours, flat })
}

/// Writes the posterior as a CSV and as an SVG heatmap with the uniform
/// point, the MLE and the credible contours overlaid.
pub fn emit_posterior_heatmap(
    posterior: &BetaPosterior,
    mle: Option<(f64, f64)>,
    csv_path: &Path,
    svg_path: &Path,
    metadata: &str,
) -> Result<HeatmapSummary> {
    let comment: String = metadata.lines().map(|l| format!("# {l}\n")).collect();
    write_text(csv_path, &posterior_csv(posterior, &comment))?;
    let (svg, summary) = posterior_heatmap_svg(posterior, mle, metadata);
    write_text(svg_path, &svg)?;
    Ok(summary)
}
