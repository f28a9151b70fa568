//! Exact Gaussian Process conditioning.
//!
//! Given training data `(X, f, N)` the predictive distribution at test
//! inputs `X*` is
//!
//! ```text
//! μ_pred = μ* + K* (K + N)⁻¹ (f − μ)
//! K_pred = K** − K* (K + N)⁻¹ K*ᵀ
//! ```
//!
//! with `(K + N)` factorized once at fit time.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{self, KernelFamily, KernelSpec, MeanSpec, Point};
use crate::linalg::{cholesky_with_jitter, JitteredCholesky};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Negative predictive variances down to `-NEGATIVE_VARIANCE_TOL · σ²` are
/// round-off and get clipped to zero.
pub const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

/// Observed function values with their known per-point noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Point>,
    values: Vec<f64>,
    noise_variances: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Point>, values: Vec<f64>, noise_variances: Vec<f64>) -> Result<Self> {
        if values.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                found: values.len(),
            });
        }
        if noise_variances.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                found: noise_variances.len(),
            });
        }
        kernels::common_dimension(&inputs)?;
        if inputs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite input coordinate".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite observed value".into()));
        }
        if noise_variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "noise variances must be finite and non-negative".into(),
            ));
        }
        Ok(Dataset {
            inputs,
            values,
            noise_variances,
        })
    }

    /// 1-D dataset with a common noise standard deviation.
    pub fn from_1d(xs: &[f64], values: Vec<f64>, noise_sd: f64) -> Result<Self> {
        let n = xs.len();
        Dataset::new(kernels::points_1d(xs), values, vec![noise_sd * noise_sd; n])
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn inputs(&self) -> &[Point] {
        &self.inputs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.noise_variances
    }

    /// Same data with `extra` added to every noise variance.
    pub fn with_added_noise(&self, extra: f64) -> Result<Self> {
        Dataset::new(
            self.inputs.clone(),
            self.values.clone(),
            self.noise_variances.iter().map(|v| v + extra).collect(),
        )
    }

    fn check_distinct(&self) -> Result<()> {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if self.inputs[i] == self.inputs[j]
                    && self.noise_variances[i] + self.noise_variances[j] == 0.0
                {
                    return Err(Error::DuplicateInputs {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(())
    }

    fn residuals(&self, mean: &MeanSpec) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.inputs
                .iter()
                .zip(&self.values)
                .map(|(x, f)| f - mean.eval(x)),
        )
    }

    fn input_range(&self) -> f64 {
        let d = self.dimension();
        let mut widest = 0.0_f64;
        for k in 0..d {
            let (lo, hi) = self
                .inputs
                .iter()
                .map(|p| p[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            widest = widest.max(hi - lo);
        }
        if widest > 0.0 {
            widest
        } else {
            1.0
        }
    }
}

/// Predictive mean vector and full covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl Prediction {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: covariance.nrows(),
            });
        }
        Ok(Prediction { mean, covariance })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn variances(&self) -> DVector<f64> {
        self.covariance.diagonal()
    }

    /// Predictive distribution of noisy observations: adds the per-point
    /// noise variances to the diagonal of the latent covariance.
    pub fn with_observation_noise(&self, noise_variances: &[f64]) -> Result<Self> {
        if noise_variances.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: noise_variances.len(),
            });
        }
        let mut covariance = self.covariance.clone();
        for (i, v) in noise_variances.iter().enumerate() {
            covariance[(i, i)] += v;
        }
        Ok(Prediction {
            mean: self.mean.clone(),
            covariance,
        })
    }
}

/// A GP conditioned on training data, with `(K + N + jitter·I)` factorized.
#[derive(Debug, Clone)]
pub struct FittedGP {
    kernel: KernelSpec,
    mean: MeanSpec,
    data: Dataset,
    chol: JitteredCholesky,
    alpha: DVector<f64>,
}

impl FittedGP {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mean(&self) -> &MeanSpec {
        &self.mean
    }

    pub fn training_data(&self) -> &Dataset {
        &self.data
    }

    pub fn jitter(&self) -> f64 {
        self.chol.jitter
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + N + jitter·I`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn predict(&self, test_inputs: &[Point]) -> Result<Prediction> {
        predict(self, test_inputs)
    }
}

fn training_covariance(kernel: &KernelSpec, data: &Dataset) -> Result<DMatrix<f64>> {
    let mut k = kernels::gram_symmetric(kernel, data.inputs())?;
    for (i, v) in data.noise_variances.iter().enumerate() {
        k[(i, i)] += v;
    }
    Ok(k)
}

/// Factorizes `K + N` for the given kernel and data.
pub fn fit(kernel: KernelSpec, mean: MeanSpec, data: Dataset) -> Result<FittedGP> {
    data.check_distinct()?;
    let cov = training_covariance(&kernel, &data)?;
    let chol = cholesky_with_jitter(&cov)?;
    let alpha = chol.factor.solve(&data.residuals(&mean));
    Ok(FittedGP {
        kernel,
        mean,
        data,
        chol,
        alpha,
    })
}

/// Predictive mean and covariance at `test_inputs`.
pub fn predict(model: &FittedGP, test_inputs: &[Point]) -> Result<Prediction> {
    let m = test_inputs.len();
    let d = kernels::common_dimension(test_inputs)?;
    if m > 0 && !model.data.is_empty() && d != model.data.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.data.dimension(),
            found: d,
        });
    }
    let k_star = kernels::gram_matrix(&model.kernel, test_inputs, model.data.inputs())?;
    let k_star_star = kernels::gram_symmetric(&model.kernel, test_inputs)?;

    let prior_mean = DVector::from_iterator(m, test_inputs.iter().map(|x| model.mean.eval(x)));
    let mean = prior_mean + &k_star * &model.alpha;

    // V = L⁻¹ K*ᵀ, so K* (K+N)⁻¹ K*ᵀ = Vᵀ V.
    let mut v = k_star.transpose();
    if !model.data.is_empty() {
        let l = model.chol.factor.l_dirty();
        if !l.solve_lower_triangular_mut(&mut v) {
            return Err(Error::IllConditioned {
                jitter: model.chol.jitter,
            });
        }
    }
    let reduction = v.transpose() * &v;
    let mut covariance = k_star_star - reduction;
    symmetrize(&mut covariance);

    let floor = -NEGATIVE_VARIANCE_TOL * model.kernel.signal_variance();
    for i in 0..m {
        let var = covariance[(i, i)];
        if var < 0.0 {
            if var < floor {
                return Err(Error::NegativeVariance { index: i, value: var });
            }
            covariance[(i, i)] = 0.0;
        }
    }
    Ok(Prediction { mean, covariance })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Log density of the observed values under `N(μ, K + N)`.
pub fn log_marginal_likelihood(kernel: &KernelSpec, mean: &MeanSpec, data: &Dataset) -> Result<f64> {
    data.check_distinct()?;
    let cov = training_covariance(kernel, data)?;
    let chol = cholesky_with_jitter(&cov)?;
    let r = data.residuals(mean);
    let alpha = chol.factor.solve(&r);
    Ok(gaussian_log_density(&r, &alpha, &chol))
}

fn gaussian_log_density(r: &DVector<f64>, alpha: &DVector<f64>, chol: &JitteredCholesky) -> f64 {
    let n = r.len() as f64;
    -0.5 * r.dot(alpha) - 0.5 * chol.ln_determinant() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln σ², ln ℓ)`, plus `ln σ_n²` when `extra_noise` is given (a
/// homoscedastic noise variance added on top of the data's own).
pub fn log_marginal_likelihood_with_gradient(
    kernel: &KernelSpec,
    mean: &MeanSpec,
    data: &Dataset,
    extra_noise: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    data.check_distinct()?;
    let n = data.len();
    let mut cov = DMatrix::zeros(n, n);
    let mut d_signal = DMatrix::zeros(n, n);
    let mut d_length = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let r = kernels::distance(&data.inputs[i], &data.inputs[j]);
            let [gs, gl] = kernel.eval_distance_log_grad(r);
            for (m, v) in [(&mut cov, gs), (&mut d_signal, gs), (&mut d_length, gl)] {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        cov[(j, j)] += data.noise_variances[j] + extra_noise.unwrap_or(0.0);
    }
    let chol = cholesky_with_jitter(&cov)?;
    let r = data.residuals(mean);
    let alpha = chol.factor.solve(&r);
    let value = gaussian_log_density(&r, &alpha, &chol);

    // ∂/∂θ = ½ tr((ααᵀ − (K+N)⁻¹) ∂K/∂θ)
    let inv = chol.factor.inverse();
    let weight = &alpha * alpha.transpose() - inv;
    let half_trace = |dk: &DMatrix<f64>| 0.5 * weight.component_mul(dk).sum();
    let mut grad = vec![half_trace(&d_signal), half_trace(&d_length)];
    if let Some(noise) = extra_noise {
        grad.push(0.5 * noise * weight.trace());
    }
    Ok((value, grad))
}

/// Hyperparameter training options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Also fit a homoscedastic noise variance on top of the data's own.
    pub train_noise: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            restarts: 5,
            seed: 0,
            train_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub start: Vec<f64>,
    pub log_params: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub kernel: KernelSpec,
    /// Trained extra noise variance, when requested.
    pub noise_variance: Option<f64>,
    pub log_likelihood: f64,
    /// Best point sits within 1e-3 (log units) of a search-box edge.
    pub hit_bound: bool,
    pub restarts: Vec<RestartOutcome>,
}

struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn near_edge(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(v, (lo, hi))| (v - lo).abs() < 1e-3 || (hi - v).abs() < 1e-3)
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Maximum-likelihood hyperparameters by multi-start Nelder–Mead in log space.
///
/// Starts are drawn log-uniformly with `ℓ ∈ [0.01, 10]·range(X)` and
/// `σ² ∈ [0.01, 100]·var(f)`; the search is confined to a wider box and a
/// best point on its edge is reported through [`TrainOutcome::hit_bound`].
pub fn train(
    family: KernelFamily,
    mean: &MeanSpec,
    data: &Dataset,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("training needs at least one restart".into()));
    }
    if data.len() < 2 {
        return Err(Error::TrainingFailure(
            "need at least two observations to train hyperparameters".into(),
        ));
    }
    data.check_distinct()?;
    let value_var = sample_variance(data.values());
    if !(value_var > 0.0) {
        return Err(Error::TrainingFailure(
            "observed values have zero variance; the signal variance is not identifiable".into(),
        ));
    }
    let range = data.input_range();
    let (ln_v, ln_r) = (value_var.ln(), range.ln());
    let ln = f64::ln;

    let mut bounds = SearchBox {
        lower: vec![ln_v + ln(1e-6), ln_r + ln(1e-3)],
        upper: vec![ln_v + ln(1e4), ln_r + ln(1e2)],
    };
    let mut start_lo = vec![ln_v + ln(0.01), ln_r + ln(0.01)];
    let mut start_hi = vec![ln_v + ln(100.0), ln_r + ln(10.0)];
    if opts.train_noise {
        bounds.lower.push(ln_v + ln(1e-8));
        bounds.upper.push(ln_v + ln(10.0));
        start_lo.push(ln_v + ln(1e-4));
        start_hi.push(ln_v + ln(1.0));
    }

    let objective = |x: &[f64]| -> f64 {
        if !bounds.contains(x) {
            return f64::INFINITY;
        }
        let Ok(kernel) = KernelSpec::from_log_params(family, [x[0], x[1]]) else {
            return f64::INFINITY;
        };
        let extra = if opts.train_noise { x[2].exp() } else { 0.0 };
        let lml = if extra > 0.0 {
            data.with_added_noise(extra)
                .and_then(|d| log_marginal_likelihood(&kernel, mean, &d))
        } else {
            log_marginal_likelihood(&kernel, mean, data)
        };
        lml.map_or(f64::INFINITY, |v| -v)
    };

    let nm_opts = NelderMeadOptions {
        max_iter: 4000,
        f_tol: 1e-9,
        x_tol: 1e-6,
    };
    let step = vec![0.5; start_lo.len()];
    let mut restarts = Vec::with_capacity(opts.restarts);
    for i in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        let start: Vec<f64> = start_lo
            .iter()
            .zip(&start_hi)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect();
        let first = nelder_mead(objective, &start, &step, nm_opts);
        // A fresh simplex around the first optimum guards against collapse.
        let second = nelder_mead(objective, &first.x, &vec![0.1; start.len()], nm_opts);
        restarts.push(RestartOutcome {
            start,
            log_likelihood: -second.value,
            log_params: second.x,
            iterations: first.iterations + second.iterations,
            converged: second.converged && second.value.is_finite(),
        });
    }

    let best = restarts
        .iter()
        .filter(|r| r.converged)
        .max_by(|a, b| a.log_likelihood.total_cmp(&b.log_likelihood))
        .ok_or_else(|| {
            let detail: Vec<String> = restarts
                .iter()
                .map(|r| format!("start {:?} -> {:?} (lml {})", r.start, r.log_params, r.log_likelihood))
                .collect();
            Error::TrainingFailure(format!(
                "no restart converged: {}",
                detail.join("; ")
            ))
        })?;

    let kernel = KernelSpec::from_log_params(family, [best.log_params[0], best.log_params[1]])?;
    Ok(TrainOutcome {
        kernel,
        noise_variance: opts.train_noise.then(|| best.log_params[2].exp()),
        log_likelihood: best.log_likelihood,
        hit_bound: bounds.near_edge(&best.log_params),
        restarts: restarts.clone(),
    })
}
