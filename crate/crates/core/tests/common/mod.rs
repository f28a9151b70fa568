//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's linear algebra or special functions.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kernval::gp::Dataset;
use kernval::kernels::{KernelFamily, KernelSpec, MeanSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let panel: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum();
        total += 0.5 * h * panel;
    }
    total
}

pub fn erf_oracle(z: f64) -> f64 {
    let panels = ((z.abs() * 8.0).ceil() as usize).max(1);
    2.0 / std::f64::consts::PI.sqrt() * integrate(|t| (-t * t).exp(), 0.0, z, panels)
}

/// Upper normal tail by direct integration of the density, so tails keep
/// full relative precision.
pub fn normal_survival_oracle(e: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if e >= 0.0 {
        integrate(pdf, e, e + 40.0, 400)
    } else {
        1.0 - integrate(pdf, -e, -e + 40.0, 400)
    }
}

fn kernel_value(spec: &KernelSpec, r: f64) -> f64 {
    let (s2, l) = (spec.signal_variance(), spec.length_scale());
    match spec.family() {
        KernelFamily::SquaredExponential => s2 * (-r * r / (2.0 * l * l)).exp(),
        KernelFamily::Matern15 => {
            let u = 3f64.sqrt() * r / l;
            s2 * (1.0 + u) * (-u).exp()
        }
        KernelFamily::Matern25 => {
            let u = 5f64.sqrt() * r / l;
            s2 * (1.0 + u + u * u / 3.0) * (-u).exp()
        }
    }
}

fn cov(spec: &KernelSpec, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel_value(spec, (a[i] - b[j]).abs()))
}

/// Conditional of the joint Gaussian over (train, test) via an explicit
/// LU inverse of the training block `K + N + jitter·I`.
pub fn schur_predict(
    spec: &KernelSpec,
    mean: f64,
    xs: &[f64],
    ys: &[f64],
    noise_var: &[f64],
    jitter: f64,
    xt: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let mut k11 = cov(spec, xs, xs);
    for (i, v) in noise_var.iter().enumerate() {
        k11[(i, i)] += v + jitter;
    }
    let k21 = cov(spec, xt, xs);
    let k22 = cov(spec, xt, xt);
    let resid = DMatrix::from_iterator(ys.len(), 1, ys.iter().map(|y| y - mean));
    let w = refined_solve(&k11, &resid);
    let mu = DVector::from_element(xt.len(), mean) + (&k21 * w).column(0);
    let c = k22 - &k21 * refined_solve(&k11, &k21.transpose());
    (mu, c)
}

/// LU solve of `a x = b` with one step of iterative refinement.
pub fn refined_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let lu = a.clone().lu();
    let x = lu.solve(b).expect("oracle solve");
    let r = b - a * &x;
    x + lu.solve(&r).expect("oracle solve")
}

/// Log marginal likelihood of `N(mean, K + N + jitter·I)` from an LU
/// inverse and LU determinant.
pub fn dense_lml(spec: &KernelSpec, mean: f64, xs: &[f64], ys: &[f64], noise_var: &[f64], jitter: f64) -> f64 {
    let mut k = cov(spec, xs, xs);
    for (i, v) in noise_var.iter().enumerate() {
        k[(i, i)] += v + jitter;
    }
    let lu = k.clone().lu();
    let det = lu.determinant();
    let inv = lu.try_inverse().expect("oracle inverse");
    let r = DVector::from_iterator(ys.len(), ys.iter().map(|y| y - mean));
    -0.5 * (r.transpose() * inv * &r)[(0, 0)] - 0.5 * det.ln() - 0.5 * xs.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

pub struct Instance {
    pub kernel: KernelSpec,
    pub mean: MeanSpec,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub noise_sd: f64,
    pub xt: Vec<f64>,
}

impl Instance {
    pub fn dataset(&self) -> Dataset {
        Dataset::from_1d(&self.xs, self.ys.clone(), self.noise_sd).unwrap()
    }

    pub fn noise_var(&self) -> Vec<f64> {
        vec![self.noise_sd * self.noise_sd; self.xs.len()]
    }

    /// Smallest rung of the jitter ladder, which these well-conditioned
    /// instances always reach.
    pub fn base_jitter(&self) -> f64 {
        1e-10 * (self.kernel.signal_variance() + self.noise_sd * self.noise_sd)
    }
}

/// Random 1-D regression problem with moderate conditioning.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Instance {
    let family = KernelFamily::ALL[rng.random_range(0..3)];
    let kernel = KernelSpec::new(family, rng.random_range(0.3..3.0), rng.random_range(0.05..0.5)).unwrap();
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let xt: Vec<f64> = (0..m).map(|_| rng.random_range(-0.2..1.2)).collect();
    Instance {
        kernel,
        mean: MeanSpec::constant(rng.random_range(-1.0..1.0)),
        xs,
        ys,
        noise_sd: rng.random_range(0.05..0.3),
        xt,
    }
}

/// Relative error with a floor on the denominator for entries near zero.
pub fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}
