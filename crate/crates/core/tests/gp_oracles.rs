mod common;

use common::{dense_lml, random_instance, rel_err, rng, schur_predict};
use kernval::gp::{self, log_marginal_likelihood, log_marginal_likelihood_with_gradient};
use kernval::kernels::points_1d;

#[test]
fn prediction_matches_schur_complement_oracle() {
    let mut r = rng(11);
    for _ in 0..100 {
        let inst = random_instance(&mut r, 30, 10);
        let model = gp::fit(inst.kernel, inst.mean, inst.dataset()).unwrap();
        let pred = model.predict(&points_1d(&inst.xt)).unwrap();
        let (mu, cov) = schur_predict(
            &inst.kernel,
            inst.mean.constant,
            &inst.xs,
            &inst.ys,
            &inst.noise_var(),
            model.jitter(),
            &inst.xt,
        );
        assert_eq!(model.jitter(), inst.base_jitter());
        // Entries far below the matrix scale are compared absolutely
        // (1e-14 of σ²); no double-precision route resolves them relatively.
        let s2 = inst.kernel.signal_variance();
        for i in 0..inst.xt.len() {
            assert!(rel_err(pred.mean[i], mu[i], 1e-6 * s2.sqrt()) < 1e-8);
            for j in 0..inst.xt.len() {
                assert!(rel_err(pred.covariance[(i, j)], cov[(i, j)], 1e-6 * s2) < 1e-8);
            }
        }
    }
}

#[test]
fn log_marginal_likelihood_matches_dense_inverse() {
    let mut r = rng(12);
    for _ in 0..50 {
        let inst = random_instance(&mut r, 30, 1);
        let got = log_marginal_likelihood(&inst.kernel, &inst.mean, &inst.dataset()).unwrap();
        let want = dense_lml(&inst.kernel, inst.mean.constant, &inst.xs, &inst.ys, &inst.noise_var(), inst.base_jitter());
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn gradient_agrees_with_central_differences() {
    let mut r = rng(13);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 25, 1);
        let data = inst.dataset();
        let (_, grad) = log_marginal_likelihood_with_gradient(&inst.kernel, &inst.mean, &data, None).unwrap();
        let base = inst.kernel.log_params();
        for k in 0..2 {
            let fd = |h: f64| {
                let mut up = base;
                let mut dn = base;
                up[k] += h;
                dn[k] -= h;
                let f = |p: [f64; 2]| {
                    let spec = kernval::kernels::KernelSpec::from_log_params(inst.kernel.family(), p).unwrap();
                    log_marginal_likelihood(&spec, &inst.mean, &data).unwrap()
                };
                (f(up) - f(dn)) / (2.0 * h)
            };
            let scale = grad[k].abs().max(1.0);
            assert!((fd(1e-4) - grad[k]).abs() < 1e-5 * scale);
            assert!((fd(1e-3) - grad[k]).abs() < 1e-3 * scale);
        }
    }
}

#[test]
fn zero_noise_model_interpolates_training_points() {
    let mut r = rng(14);
    let inst = random_instance(&mut r, 12, 1);
    let data = kernval::gp::Dataset::from_1d(&inst.xs, inst.ys.clone(), 0.0).unwrap();
    let model = gp::fit(inst.kernel, inst.mean, data).unwrap();
    let pred = model.predict(&points_1d(&inst.xs)).unwrap();
    for (m, y) in pred.mean.iter().zip(&inst.ys) {
        assert!((m - y).abs() < 1e-4);
    }
}
