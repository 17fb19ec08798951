mod common;

use common::random_instance;
use proptest::prelude::*;
use toptail::classical::{censored_hill_estimate, hill_estimate, hill_on_sample, CensoredSample, HillCut};
use toptail::design::DesignMatrix;
use toptail::distributions::{InverseCdf, ParetoLaw, RngSeed};
use toptail::regression::{fit_censored, fit_exact, fit_uncensored, FitOptions};
use toptail::threshold::{empirical_quantile, Threshold};

fn tight() -> FitOptions {
    FitOptions { tolerance: 1e-13, ..FitOptions::default() }
}

#[test]
fn intercept_only_fit_is_the_censored_hill_estimate() {
    for seed in 0..20 {
        let (s, _) = random_instance(seed, 500);
        assert!(s.censored_count() > 0);
        let fit = fit_censored(&s, &DesignMatrix::intercept_only(s.len()), &tight()).unwrap();
        let hill = censored_hill_estimate(&s).unwrap();
        assert!((fit.theta[0].exp() - hill).abs() <= 1e-10 * hill, "{} vs {hill}", fit.theta[0].exp());
    }
}

#[test]
fn without_censoring_all_three_estimators_agree() {
    let y = ParetoLaw::new(1.0, 2.0).unwrap().sample(4000, RngSeed(1)).unwrap();
    let (s, kept) = CensoredSample::exact(&y, None, Threshold::Fraction(0.25)).unwrap();
    let x: Vec<f64> = (0..y.len()).map(|i| (i % 7) as f64 / 7.0).collect();
    let x_tail: Vec<f64> = kept.iter().map(|&i| x[i]).collect();
    let d = DesignMatrix::with_intercept(&[("x", &x_tail)]).unwrap();

    let cens = fit_censored(&s, &d, &tight()).unwrap();
    let exact = fit_exact(&s, &d, &tight()).unwrap();
    let full = DesignMatrix::with_intercept(&[("x", &x)]).unwrap();
    let unc = fit_uncensored(&y, None, &full, Threshold::Fraction(0.25), &tight()).unwrap();
    for j in 0..2 {
        assert!((cens.theta[j] - exact.theta[j]).abs() < 1e-10);
        assert!((cens.theta[j] - unc.theta[j]).abs() < 1e-10);
    }

    let io = fit_censored(&s, &DesignMatrix::intercept_only(s.len()), &tight()).unwrap();
    let hill = hill_estimate(&y, HillCut::Count(1000)).unwrap();
    assert!((io.theta[0].exp() - hill).abs() < 1e-10 * hill);
    assert!((censored_hill_estimate(&s).unwrap() - hill).abs() < 1e-12 * hill);
}

#[test]
fn censored_hill_is_consistent_where_the_naive_hill_is_not() {
    let law = ParetoLaw::new(1.0, 2.0).unwrap();
    let (mut cens, mut naive) = (0.0, 0.0);
    let reps = 2000;
    for rep in 0..reps {
        let mut rng = RngSeed(77).stream(rep);
        let y: Vec<f64> = (0..5000).map(|_| law.draw(&mut rng)).collect();
        let y_c = empirical_quantile(&y, 0.95).unwrap();
        let s = CensoredSample::from_top_coded(&y, None, y_c, Threshold::Level(1.0), 0.0).unwrap().0;
        cens += censored_hill_estimate(&s).unwrap();
        naive += hill_on_sample(&s).unwrap();
    }
    let cens_bias = cens / reps as f64 - 2.0;
    let naive_bias = naive / reps as f64 - 2.0;
    assert!(cens_bias.abs() < 0.02, "censored bias {cens_bias}");
    assert!(naive_bias > 5.0 * cens_bias.abs(), "naive bias {naive_bias}");
}

#[test]
fn intercept_only_standard_error_is_one_over_root_n0() {
    let y = ParetoLaw::new(1.0, 1.5).unwrap().sample(40_000, RngSeed(8)).unwrap();
    let (s, _) = CensoredSample::exact(&y, None, Threshold::Level(1.0)).unwrap();
    let fit = fit_censored(&s, &DesignMatrix::intercept_only(s.len()), &FitOptions::default()).unwrap();
    let target = (s.len() as f64).powf(-0.5);
    assert!((fit.std_errors[0] / target - 1.0).abs() < 0.1, "{} vs {target}", fit.std_errors[0]);
    assert!(fit.lambda.iter().all(|&l| l == 1.0));
}

#[test]
fn fits_are_bit_identical_across_calls() {
    let (s, d) = random_instance(3, 800);
    let a = fit_censored(&s, &d, &FitOptions::default()).unwrap();
    let b = fit_censored(&s, &d, &FitOptions::default()).unwrap();
    assert_eq!(a.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.covariance, b.covariance);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn an_extra_censored_row_does_not_raise_the_index_at_its_covariates(seed in 0u64..10_000, row in 0usize..300) {
        let (s, d) = random_instance(seed, 300);
        let base = fit_censored(&s, &d, &tight()).unwrap();
        let x = d.row(row).to_vec();

        let mut values = s.values().to_vec();
        let mut censored = s.censored().to_vec();
        let mut weights = s.weights().unwrap().to_vec();
        values.push(s.y_c());
        censored.push(true);
        weights.push(1.0);
        let bigger = CensoredSample::new(values, censored, s.y0(), s.y_c()).unwrap().with_weights(weights).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..d.nrows()).map(|i| d.row(i).to_vec()).collect();
        rows.push(x.clone());
        let d2 = DesignMatrix::from_rows(rows, d.names().to_vec(), true).unwrap();
        let after = fit_censored(&bigger, &d2, &tight()).unwrap();
        prop_assert!(after.alpha_at(&x) <= base.alpha_at(&x) * (1.0 + 1e-9));
    }

    #[test]
    fn estimators_are_scale_invariant(seed in 0u64..10_000, lambda in 1e-3f64..1e3) {
        let (s, _) = random_instance(seed, 200);
        let r = s.rescaled(lambda).unwrap();
        let a = censored_hill_estimate(&s).unwrap();
        prop_assert!((censored_hill_estimate(&r).unwrap() - a).abs() < 1e-10 * a);
        let h = hill_on_sample(&s).unwrap();
        prop_assert!((hill_on_sample(&r).unwrap() - h).abs() < 1e-10 * h);
    }

    #[test]
    fn raising_an_uncensored_value_lowers_the_censored_hill(seed in 0u64..10_000, bump in 0.01f64..0.5) {
        let (s, _) = random_instance(seed, 50);
        let i = s.censored().iter().position(|c| !c).unwrap();
        let mut values = s.values().to_vec();
        let room = s.y_c() - values[i];
        values[i] += bump * room;
        let t = CensoredSample::new(values, s.censored().to_vec(), s.y0(), s.y_c())
            .unwrap()
            .with_weights(s.weights().unwrap().to_vec())
            .unwrap();
        prop_assert!(censored_hill_estimate(&t).unwrap() < censored_hill_estimate(&s).unwrap());
    }
}
