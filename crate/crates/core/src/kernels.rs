//! Stationary covariance kernels and the constant mean function.
//!
//! All kernels are functions of the Euclidean distance `r = |x - x'|`:
//!
//! * squared exponential: `σ² exp(-r² / 2ℓ²)`
//! * Matérn ν = 3/2: `σ² (1 + √3 r/ℓ) exp(-√3 r/ℓ)`
//! * Matérn ν = 5/2: `σ² (1 + √5 r/ℓ + 5r²/3ℓ²) exp(-√5 r/ℓ)`

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An input location. Experiments are 1-D, the API is not.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    SquaredExponential,
    Matern15,
    Matern25,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::SquaredExponential,
        KernelFamily::Matern15,
        KernelFamily::Matern25,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "rbf",
            KernelFamily::Matern15 => "matern15",
            KernelFamily::Matern25 => "matern25",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rbf" | "se" | "squared_exponential" | "squaredexponential" => {
                Ok(KernelFamily::SquaredExponential)
            }
            "matern15" | "matern32" | "matern_1.5" => Ok(KernelFamily::Matern15),
            "matern25" | "matern52" | "matern_2.5" => Ok(KernelFamily::Matern25),
            other => Err(Error::InvalidSpec(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Kernel family plus its two hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    signal_variance: f64,
    length_scale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, signal_variance: f64, length_scale: f64) -> Result<Self> {
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "signal variance must be positive and finite (got {signal_variance})"
            )));
        }
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "length scale must be positive and finite (got {length_scale})"
            )));
        }
        Ok(KernelSpec {
            family,
            signal_variance,
            length_scale,
        })
    }

    /// Builds a spec from `(ln σ², ln ℓ)`, the coordinates the optimizer works in.
    pub fn from_log_params(family: KernelFamily, log_params: [f64; 2]) -> Result<Self> {
        KernelSpec::new(family, log_params[0].exp(), log_params[1].exp())
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn log_params(&self) -> [f64; 2] {
        [self.signal_variance.ln(), self.length_scale.ln()]
    }

    /// Kernel value as a function of distance.
    pub fn eval_distance(&self, r: f64) -> f64 {
        let s2 = self.signal_variance;
        match self.family {
            KernelFamily::SquaredExponential => {
                let t = r / self.length_scale;
                s2 * (-0.5 * t * t).exp()
            }
            KernelFamily::Matern15 => {
                let u = 3f64.sqrt() * r / self.length_scale;
                s2 * (1.0 + u) * (-u).exp()
            }
            KernelFamily::Matern25 => {
                let u = 5f64.sqrt() * r / self.length_scale;
                s2 * (1.0 + u + u * u / 3.0) * (-u).exp()
            }
        }
    }

    /// Derivatives of `k(r)` with respect to `(ln σ², ln ℓ)`.
    pub fn eval_distance_log_grad(&self, r: f64) -> [f64; 2] {
        let s2 = self.signal_variance;
        let k = self.eval_distance(r);
        let d_log_ell = match self.family {
            KernelFamily::SquaredExponential => {
                let t = r / self.length_scale;
                k * t * t
            }
            KernelFamily::Matern15 => {
                let u = 3f64.sqrt() * r / self.length_scale;
                s2 * u * u * (-u).exp()
            }
            KernelFamily::Matern25 => {
                let u = 5f64.sqrt() * r / self.length_scale;
                s2 * u * u * (1.0 + u) * (-u).exp() / 3.0
            }
        };
        [k, d_log_ell]
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(signal_variance = {}, length_scale = {})",
            self.family, self.signal_variance, self.length_scale
        )
    }
}

/// Constant mean function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanSpec {
    pub constant: f64,
}

impl MeanSpec {
    pub fn constant(constant: f64) -> Self {
        MeanSpec { constant }
    }

    pub fn zero() -> Self {
        MeanSpec::default()
    }

    pub fn eval(&self, _x: &[f64]) -> f64 {
        self.constant
    }
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn check_dim(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

/// `k(x, x')` for a single pair of points.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_dim(x, x_prime)?;
    Ok(spec.eval_distance(distance(x, x_prime)))
}

/// Checks every point has the same dimension and returns it.
pub fn common_dimension(points: &[Point]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Ok(0);
    };
    let d = first.len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
    }
    Ok(d)
}

/// Cross-covariance matrix with entry `(i, j) = k(a_i, b_j)`.
pub fn gram_matrix(spec: &KernelSpec, a: &[Point], b: &[Point]) -> Result<DMatrix<f64>> {
    let da = common_dimension(a)?;
    let db = common_dimension(b)?;
    if !a.is_empty() && !b.is_empty() && da != db {
        return Err(Error::DimensionMismatch {
            expected: da,
            found: db,
        });
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        spec.eval_distance(distance(&a[i], &b[j]))
    }))
}

/// Symmetric Gram matrix `K(X, X)`; only the lower triangle is evaluated.
pub fn gram_symmetric(spec: &KernelSpec, x: &[Point]) -> Result<DMatrix<f64>> {
    common_dimension(x)?;
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = spec.signal_variance;
        for i in (j + 1)..n {
            let v = spec.eval_distance(distance(&x[i], &x[j]));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Wraps scalar abscissae as 1-D points.
pub fn points_1d(xs: &[f64]) -> Vec<Point> {
    xs.iter().map(|&x| vec![x]).collect()
}
