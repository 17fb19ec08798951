mod common;

use common::random_instance;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use toptail::distributions::RngSeed;
use toptail::regression::{
    fit_censored, neg_loglik_censored, neg_loglik_gradient, neg_loglik_hessian, FitOptions, Init,
};
use rand::Rng;

fn random_theta(seed: u64) -> Vec<f64> {
    let mut rng = RngSeed(seed ^ 0xabcdef).rng();
    (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn gradient_matches_central_differences_on_100_instances() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (s, d) = random_instance(seed, 150);
        let theta = random_theta(seed);
        let g = neg_loglik_gradient(&theta, &s, &d).unwrap();
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..theta.len() {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (neg_loglik_censored(&up, &s, &d).unwrap() - neg_loglik_censored(&dn, &s, &d).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[j]).abs() / scale);
        }
    }
    assert!(worst < 1e-6, "worst relative gradient error {worst:e}");
}

#[test]
fn hessian_matches_differenced_gradient() {
    for seed in 0..20 {
        let (s, d) = random_instance(seed, 100);
        let theta = random_theta(seed);
        let h = neg_loglik_hessian(&theta, &s, &d).unwrap();
        let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..3 {
            let step = 1e-6;
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[j] += step;
            dn[j] -= step;
            let gu = neg_loglik_gradient(&up, &s, &d).unwrap();
            let gd = neg_loglik_gradient(&dn, &s, &d).unwrap();
            for i in 0..3 {
                let fd = (gu[i] - gd[i]) / (2.0 * step);
                assert!((fd - h[(i, j)]).abs() / scale < 1e-6);
            }
        }
    }
}

#[test]
fn newton_from_zero_reaches_a_stationary_point() {
    for seed in 0..30 {
        let (s, d) = random_instance(seed, 400);
        let fit = fit_censored(&s, &d, &FitOptions { init: Init::Zero, ..FitOptions::default() }).unwrap();
        assert!(fit.converged && fit.iterations <= 50, "seed {seed}: {} iterations", fit.iterations);
        let g = neg_loglik_gradient(&fit.theta, &s, &d).unwrap();
        let total: f64 = (0..s.len()).map(|i| s.weight(i)).sum();
        assert!(g.iter().all(|v| v.abs() / total < 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hessian_is_positive_semidefinite(seed in 0u64..10_000, t0 in -3.0f64..3.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let (s, d) = random_instance(seed, 60);
        let h = neg_loglik_hessian(&[t0, t1, t2], &s, &d).unwrap();
        let eig = SymmetricEigen::new(h);
        prop_assert!(eig.eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn objective_is_midpoint_convex(seed in 0u64..10_000, a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0)) {
        let (s, d) = random_instance(seed, 60);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fa = neg_loglik_censored(&a, &s, &d).unwrap();
        let fb = neg_loglik_censored(&b, &s, &d).unwrap();
        let fm = neg_loglik_censored(&mid, &s, &d).unwrap();
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9 * (fa.abs() + fb.abs()).max(1.0));
    }

    #[test]
    fn rescaling_outcomes_leaves_the_fit_unchanged(seed in 0u64..10_000, lambda in 0.01f64..100.0) {
        let (s, d) = random_instance(seed, 200);
        let opts = FitOptions::default();
        let base = fit_censored(&s, &d, &opts).unwrap();
        let scaled = fit_censored(&s.rescaled(lambda).unwrap(), &d, &opts).unwrap();
        for (x, y) in base.theta.iter().zip(&scaled.theta) {
            prop_assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn ignoring_censoring_adds_the_log_density_term(seed in 0u64..10_000) {
        // Exact treatment of a top-coded row adds -x'theta to its survival term.
        let (s, d) = random_instance(seed, 80);
        let theta = random_theta(seed);
        let cens = neg_loglik_censored(&theta, &s, &d).unwrap();
        let exact = neg_loglik_censored(&theta, &s.ignoring_censoring(), &d).unwrap();
        let penalty: f64 = (0..s.len()).filter(|&i| s.censored()[i]).map(|i| s.weight(i) * d.dot(i, &theta)).sum();
        prop_assert!((exact - cens + penalty).abs() < 1e-8 * cens.abs().max(1.0));
    }
}
