//! Cholesky factorization with an escalating diagonal jitter.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative jitter levels tried in order, as multiples of the largest diagonal entry.
pub const JITTER_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// A Cholesky factor of `A + jitter·I`.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    pub factor: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl JitteredCholesky {
    pub fn l(&self) -> DMatrix<f64> {
        self.factor.l()
    }

    /// `ln det(A + jitter·I)`.
    pub fn ln_determinant(&self) -> f64 {
        2.0 * self.factor.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Factorizes a symmetric matrix, adding `ε·max(diag)·I` for the first `ε` on
/// [`JITTER_LADDER`] that makes the factorization succeed.
pub fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<JitteredCholesky> {
    let scale = a.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut last = 0.0;
    for rel in JITTER_LADDER {
        let jitter = rel * scale;
        last = jitter;
        let mut shifted = a.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(factor) = Cholesky::new(shifted) {
            if factor.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
                return Ok(JitteredCholesky { factor, jitter });
            }
        }
    }
    Err(Error::IllConditioned { jitter: last })
}
