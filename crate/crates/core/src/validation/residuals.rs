//! Mahalanobis distance and the normal-mode decomposition of residuals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gp::Prediction;
use crate::linalg::JITTER_LADDER;
use crate::specfn::normal_survival;

/// Eigenvalues below `EIGEN_FLOOR · λ_max` are treated as zero and their
/// modes dropped.
pub const EIGEN_FLOOR: f64 = 1e-12;

fn residual_vector(prediction: &Prediction, observed: &[f64]) -> Result<DVector<f64>> {
    if observed.len() != prediction.len() {
        return Err(Error::DimensionMismatch {
            expected: prediction.len(),
            found: observed.len(),
        });
    }
    if prediction.is_empty() {
        return Err(Error::InvalidInput("no test points to validate".into()));
    }
    Ok(DVector::from_column_slice(observed) - &prediction.mean)
}

/// `χ²_M = rᵀ K_pred⁻¹ r` with `r = f − μ_pred`, and its degrees of freedom.
///
/// The covariance is factorized as is when possible, otherwise with the
/// usual jitter ladder.
pub fn mahalanobis(prediction: &Prediction, observed: &[f64]) -> Result<(f64, usize)> {
    let r = residual_vector(prediction, observed)?;
    let cov = &prediction.covariance;
    let scale = cov.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let rungs = std::iter::once(0.0).chain(JITTER_LADDER.iter().map(|j| j * scale));
    for jitter in rungs {
        let mut shifted = cov.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = shifted.cholesky() {
            let mut z = r.clone();
            if chol.l_dirty().solve_lower_triangular_mut(&mut z) {
                return Ok((z.norm_squared(), r.len()));
            }
        }
    }
    let min_eigenvalue = cov.clone().symmetric_eigenvalues().min();
    Err(Error::SingularCovariance { min_eigenvalue })
}

/// Residuals projected on the eigenvectors of the predictive covariance.
///
/// With `Oᵀ K_pred O = diag(s²)` and `d = Oᵀ r`, each `e_k = d_k / s_k`
/// is standard normal under a correct model and `p_k = 1 − Φ(e_k)` is
/// uniform. Modes whose eigenvalue falls below the floor are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeResiduals {
    /// Retained `s_k²`, descending.
    pub eigenvalues: Vec<f64>,
    /// `d_k`.
    pub rotated_residuals: Vec<f64>,
    /// `e_k`.
    pub standardized: Vec<f64>,
    /// `p_k`, unclamped.
    pub survival_probs: Vec<f64>,
    /// Orthonormal eigenvectors as columns, all modes, in descending
    /// eigenvalue order.
    pub modes: DMatrix<f64>,
    pub dropped_modes: usize,
}

impl NormalModeResiduals {
    pub fn sum_of_squares(&self) -> f64 {
        self.standardized.iter().map(|e| e * e).sum()
    }

    pub fn len(&self) -> usize {
        self.standardized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.standardized.is_empty()
    }
}

pub fn normal_mode_residuals(prediction: &Prediction, observed: &[f64]) -> Result<NormalModeResiduals> {
    let r = residual_vector(prediction, observed)?;
    let n = r.len();
    let eig = SymmetricEigen::try_new(prediction.covariance.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidInput("eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    let mut modes = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        // Fix the sign so the largest-magnitude component is positive.
        let lead = v.iter().cloned().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.neg_mut();
        }
        modes.set_column(dst, &v);
    }

    let max_eigenvalue = eig.eigenvalues[order[0]];
    if !(max_eigenvalue > 0.0) {
        return Err(Error::SingularCovariance {
            min_eigenvalue: eig.eigenvalues.min(),
        });
    }
    let floor = EIGEN_FLOOR * max_eigenvalue;

    let rotated = modes.transpose() * &r;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut rotated_residuals = Vec::with_capacity(n);
    let mut standardized = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        let s2 = eig.eigenvalues[src];
        if s2 < floor {
            continue;
        }
        let d = rotated[k];
        eigenvalues.push(s2);
        rotated_residuals.push(d);
        standardized.push(d / s2.sqrt());
    }
    let survival_probs = standardized.iter().map(|&e| normal_survival(e)).collect();
    Ok(NormalModeResiduals {
        dropped_modes: n - eigenvalues.len(),
        eigenvalues,
        rotated_residuals,
        standardized,
        survival_probs,
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pred(mean: &[f64], cov: DMatrix<f64>) -> Prediction {
        Prediction::new(DVector::from_column_slice(mean), cov).unwrap()
    }

    #[test]
    fn zero_residual_gives_zero() {
        let p = pred(&[1.0, 2.0], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        assert_eq!(mahalanobis(&p, &[1.0, 2.0]).unwrap(), (0.0, 2));
        let modes = normal_mode_residuals(&p, &[1.0, 2.0]).unwrap();
        assert!(modes.standardized.iter().all(|&e| e == 0.0));
        assert!(modes.survival_probs.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn identity_covariance_is_sum_of_squares() {
        let p = pred(&[0.0, 0.0], DMatrix::identity(2, 2));
        let (chi2, dof) = mahalanobis(&p, &[3.0, 4.0]).unwrap();
        assert_relative_eq!(chi2, 25.0, max_relative = 1e-15);
        assert_eq!(dof, 2);
    }

    #[test]
    fn diagonal_covariance_modes() {
        let p = pred(&[0.0, 0.0], DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0])));
        let m = normal_mode_residuals(&p, &[2.0, 3.0]).unwrap();
        assert_eq!(m.eigenvalues, vec![9.0, 4.0]);
        for (e, p) in m.standardized.iter().zip(&m.survival_probs) {
            assert_relative_eq!(e.abs(), 1.0, max_relative = 1e-14);
            let expected = normal_survival(e.signum());
            assert_relative_eq!(*p, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn length_mismatch_errors() {
        let p = pred(&[0.0, 0.0], DMatrix::identity(2, 2));
        assert!(matches!(mahalanobis(&p, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(normal_mode_residuals(&p, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn singular_covariance_reports_smallest_eigenvalue() {
        let p = pred(&[0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        match mahalanobis(&p, &[1.0, 1.0]) {
            Err(Error::SingularCovariance { min_eigenvalue }) => assert_eq!(min_eigenvalue, -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_covariance_drops_modes() {
        // Rank one: only the (1, 1)/√2 direction carries variance.
        let p = pred(&[0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let m = normal_mode_residuals(&p, &[1.0, 1.0]).unwrap();
        assert_eq!(m.dropped_modes, 1);
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m.sum_of_squares(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let p = pred(&[0.1, 0.2, 0.3], cov.clone());
        let (a, _) = mahalanobis(&p, &[1.0, -0.5, 0.7]).unwrap();
        let perm = [2, 0, 1];
        let cov_p = DMatrix::from_fn(3, 3, |i, j| cov[(perm[i], perm[j])]);
        let mean_p: Vec<f64> = perm.iter().map(|&i| [0.1, 0.2, 0.3][i]).collect();
        let obs_p: Vec<f64> = perm.iter().map(|&i| [1.0, -0.5, 0.7][i]).collect();
        let (b, _) = mahalanobis(&pred(&mean_p, cov_p), &obs_p).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }
}
