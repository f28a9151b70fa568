//! Grid posterior over the Beta parameters `(a, b)` under a flat prior,
//! and highest-density coverage queries on it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::beta::{BetaFit, BetaSample};
use crate::error::{Error, Result};

/// Minimum cells per axis for a posterior built from data.
pub const MIN_RESOLUTION: usize = 50;

/// Maximum number of automatic ×2 widenings.
pub const MAX_WIDENINGS: usize = 8;

/// Relative likelihood below which the grid boundary counts as negligible.
pub const BOUNDARY_LIKELIHOOD_RATIO: f64 = 1e-6;

/// Rectangular cell grid over `[a_min, a_max] × [b_min, b_max]`, evaluated
/// at cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    /// Cells per axis.
    pub resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            a_min: 0.05,
            a_max: 3.0,
            b_min: 0.05,
            b_max: 3.0,
            resolution: 300,
        }
    }
}

impl GridConfig {
    fn check_bounds(&self) -> Result<()> {
        let ok = self.a_min > 0.0
            && self.b_min > 0.0
            && self.a_max > self.a_min
            && self.b_max > self.b_min
            && self.a_max.is_finite()
            && self.b_max.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!(
                "posterior grid bounds must be positive and increasing (got {self:?})"
            )));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidInput("posterior grid needs at least 2 cells per axis".into()));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        self.check_bounds()?;
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "posterior resolution must be at least {MIN_RESOLUTION} per axis (got {})",
                self.resolution
            )));
        }
        Ok(())
    }

    fn contains(&self, a: f64, b: f64) -> bool {
        a >= self.a_min && a <= self.a_max && b >= self.b_min && b <= self.b_max
    }

    fn centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let width = (hi - lo) / n as f64;
        (0..n).map(|i| lo + (i as f64 + 0.5) * width).collect()
    }
}

/// Normalized posterior over grid cells. Rows index `a`, columns `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPosterior {
    pub grid: GridConfig,
    /// Cell-centre values of `a`.
    pub a_grid: Vec<f64>,
    /// Cell-centre values of `b`.
    pub b_grid: Vec<f64>,
    /// Log of the normalized posterior density at each cell centre.
    pub log_density: DMatrix<f64>,
    /// Posterior mass per cell, summing to one.
    pub cell_mass: DMatrix<f64>,
}

fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl BetaPosterior {
    pub fn resolution(&self) -> (usize, usize) {
        (self.a_grid.len(), self.b_grid.len())
    }

    pub fn cell_area(&self) -> f64 {
        let (na, nb) = self.resolution();
        (self.grid.a_max - self.grid.a_min) / na as f64 * (self.grid.b_max - self.grid.b_min) / nb as f64
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.cell_mass.iter().copied())
    }

    /// Builds a posterior from an unnormalized log density evaluated at
    /// every cell centre. Evaluation runs in parallel; normalization is a
    /// fixed-order compensated sum, so the result does not depend on the
    /// thread count.
    pub fn from_log_density_fn<F>(grid: &GridConfig, log_density: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        grid.check_bounds()?;
        let n = grid.resolution;
        let a_grid = GridConfig::centers(grid.a_min, grid.a_max, n);
        let b_grid = GridConfig::centers(grid.b_min, grid.b_max, n);
        let columns: Vec<Vec<f64>> = b_grid
            .par_iter()
            .map(|&b| a_grid.iter().map(|&a| log_density(a, b)).collect())
            .collect();
        let raw = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
        Self::normalize(*grid, a_grid, b_grid, raw)
    }

    /// Builds a posterior from (unnormalized) cell masses.
    pub fn from_cell_masses(grid: &GridConfig, masses: DMatrix<f64>) -> Result<Self> {
        grid.check_bounds()?;
        if masses.nrows() != grid.resolution || masses.ncols() != grid.resolution {
            return Err(Error::DimensionMismatch {
                expected: grid.resolution,
                found: masses.nrows(),
            });
        }
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidInput("cell masses must be finite and non-negative".into()));
        }
        let n = grid.resolution;
        let a_grid = GridConfig::centers(grid.a_min, grid.a_max, n);
        let b_grid = GridConfig::centers(grid.b_min, grid.b_max, n);
        Self::normalize(*grid, a_grid, b_grid, masses.map(f64::ln))
    }

    fn normalize(grid: GridConfig, a_grid: Vec<f64>, b_grid: Vec<f64>, raw: DMatrix<f64>) -> Result<Self> {
        let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::InvalidInput("posterior has no finite mass on the grid".into()));
        }
        let weights = raw.map(|v| (v - peak).exp());
        let total = neumaier_sum(weights.iter().copied());
        let cell_mass = weights / total;
        let mut post = BetaPosterior {
            grid,
            a_grid,
            b_grid,
            log_density: DMatrix::zeros(0, 0),
            cell_mass,
        };
        let ln_norm = total.ln() + post.cell_area().ln();
        post.log_density = raw.map(|v| v - peak - ln_norm);
        Ok(post)
    }

    /// Cell containing `(a, b)`; points on the upper edges belong to the last cell.
    pub fn cell_of(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        if !self.grid.contains(a, b) {
            return None;
        }
        let (na, nb) = self.resolution();
        let locate = |v: f64, lo: f64, hi: f64, n: usize| {
            (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
        };
        Some((
            locate(a, self.grid.a_min, self.grid.a_max, na),
            locate(b, self.grid.b_min, self.grid.b_max, nb),
        ))
    }

    /// Highest-density cell (first in column-major order on ties).
    pub fn mode_cell(&self) -> (usize, usize) {
        let (na, _) = self.resolution();
        let idx = self
            .log_density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
            .0;
        (idx % na, idx / na)
    }

    /// True when every cell carries the same density.
    pub fn is_flat(&self) -> bool {
        let max = self.log_density.max();
        let min = self.log_density.min();
        max - min <= 1e-12
    }

    /// Mass of cells whose density strictly exceeds `log_density`.
    pub fn mass_above(&self, log_density: f64) -> f64 {
        neumaier_sum(
            self.log_density
                .iter()
                .zip(self.cell_mass.iter())
                .filter(|(d, _)| **d > log_density)
                .map(|(_, m)| *m),
        )
    }

    /// Log-density level of the smallest highest-density region holding at
    /// least `level` of the mass. `None` for a flat posterior.
    pub fn hpd_threshold(&self, level: f64) -> Option<f64> {
        if self.is_flat() {
            return None;
        }
        let mut cells: Vec<(f64, f64)> = self
            .log_density
            .iter()
            .copied()
            .zip(self.cell_mass.iter().copied())
            .collect();
        cells.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut acc = 0.0;
        for (d, m) in cells {
            acc += m;
            if acc >= level {
                return Some(d);
            }
        }
        None
    }
}

/// Posterior over `(a, b)` with a flat prior on the grid rectangle.
///
/// When `mle` is given, the grid must contain it.
pub fn beta_posterior(p: &[f64], grid: &GridConfig, mle: Option<&BetaFit>) -> Result<BetaPosterior> {
    grid.validate()?;
    if p.is_empty() {
        return Err(Error::InvalidInput("no probabilities supplied".into()));
    }
    if let Some(fit) = mle.filter(|f| !f.is_degenerate()) {
        if !grid.contains(fit.a_hat, fit.b_hat) {
            return Err(Error::WidenGrid {
                a: fit.a_hat,
                b: fit.b_hat,
            });
        }
    }
    let sample = BetaSample::new(p)?;
    BetaPosterior::from_log_density_fn(grid, |a, b| sample.log_likelihood(a, b))
}

/// Sides of the grid where the likelihood is not yet negligible.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Touching {
    a_low: bool,
    a_high: bool,
    b_low: bool,
    b_high: bool,
}

// Compares the likelihood on the grid's edge lines (not the edge cells'
// centres, which drift inwards as widening coarsens the cells) with the
// likelihood at the MLE.
fn boundary_touching(sample: &BetaSample, grid: &GridConfig, mle: &BetaFit) -> Touching {
    let peak = mle.max_log_likelihood.max(sample.log_likelihood(mle.a_hat, mle.b_hat));
    let cut = BOUNDARY_LIKELIHOOD_RATIO.ln();
    let a_line = GridConfig::centers(grid.a_min, grid.a_max, grid.resolution);
    let b_line = GridConfig::centers(grid.b_min, grid.b_max, grid.resolution);
    let edge_max = |fixed: f64, along: &[f64], a_fixed: bool| {
        along
            .iter()
            .map(|&v| if a_fixed { sample.log_likelihood(fixed, v) } else { sample.log_likelihood(v, fixed) })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Touching {
        a_low: edge_max(grid.a_min, &b_line, true) - peak > cut,
        a_high: edge_max(grid.a_max, &b_line, true) - peak > cut,
        b_low: edge_max(grid.b_min, &a_line, false) - peak > cut,
        b_high: edge_max(grid.b_max, &a_line, false) - peak > cut,
    }
}

/// Builds the posterior, doubling the grid outwards until it holds the MLE,
/// the uniform point `(1, 1)`, and the `1e-6` relative-likelihood contour.
///
/// Returns the posterior and the number of widenings applied. Degenerate
/// fits skip the boundary checks, since their likelihood has no maximum.
pub fn beta_posterior_auto(p: &[f64], grid: &GridConfig, mle: &BetaFit) -> Result<(BetaPosterior, usize)> {
    let mut grid = *grid;
    grid.validate()?;
    for widenings in 0..=MAX_WIDENINGS {
        let mut want = Touching::default();
        if grid.a_min > 1.0 {
            want.a_low = true;
        }
        if grid.a_max < 1.0 {
            want.a_high = true;
        }
        if grid.b_min > 1.0 {
            want.b_low = true;
        }
        if grid.b_max < 1.0 {
            want.b_high = true;
        }
        if !mle.is_degenerate() {
            want.a_low |= mle.a_hat < grid.a_min;
            want.a_high |= mle.a_hat > grid.a_max;
            want.b_low |= mle.b_hat < grid.b_min;
            want.b_high |= mle.b_hat > grid.b_max;
        }
        if want == Touching::default() {
            let touching = if mle.is_degenerate() {
                Touching::default()
            } else {
                boundary_touching(&BetaSample::new(p)?, &grid, mle)
            };
            if touching == Touching::default() {
                return Ok((beta_posterior(p, &grid, Some(mle))?, widenings));
            }
            want = touching;
        }
        if widenings == MAX_WIDENINGS {
            break;
        }
        if want.a_low {
            grid.a_min /= 2.0;
        }
        if want.a_high {
            grid.a_max *= 2.0;
        }
        if want.b_low {
            grid.b_min /= 2.0;
        }
        if want.b_high {
            grid.b_max *= 2.0;
        }
    }
    Err(Error::WidenGrid {
        a: mle.a_hat,
        b: mle.b_hat,
    })
}

/// Posterior mass of all cells denser than the cell holding `(a, b)`: the
/// credible level of the highest-density region whose boundary passes
/// through the point.
pub fn iso_posterior_coverage(posterior: &BetaPosterior, point: (f64, f64)) -> Result<f64> {
    let (a, b) = point;
    let (i, j) = posterior
        .cell_of(a, b)
        .ok_or(Error::OutsideGrid { a, b })?;
    Ok(posterior.mass_above(posterior.log_density[(i, j)]))
}
