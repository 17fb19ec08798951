//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. The Monte Carlo criteria take a few minutes in release-level
//! test builds.

mod common;

use std::process::{Command, ExitCode, Stdio};

use nalgebra::SymmetricEigen;
use rand::Rng;
use common::{random_instance, write_fixture, FIXTURE_THETA};
use toptail::classical::{censored_hill_estimate, hill_estimate, CensoredSample, HillCut};
use toptail::cli::{EffectRow, PeriodFitReport};
use toptail::design::DesignMatrix;
use toptail::distributions::{BurrLaw, InverseCdf, ParetoLaw, RngSeed};
use toptail::monte_carlo::{run_case, run_imputation_experiment, ImputationConfig, McCase, McReport};
use toptail::regression::{
    fit_censored, fit_exact, neg_loglik_censored, neg_loglik_gradient, neg_loglik_hessian, FitOptions, Init,
};
use toptail::threshold::Threshold;

const SEED: RngSeed = RngSeed(2020);

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn zero_init(mut case: McCase) -> McCase {
    case.fit.init = Init::Zero;
    case
}

fn criterion1_and_9(out: &mut Outcome) {
    let r = run_case(&McCase::reference(1, 5000, 2000, SEED).unwrap()).unwrap();
    let (h, c, t) = (r.uncensored.bias[0], r.censored.bias[0], r.naive.bias[0]);
    let rmse = r.censored.rmse[0];
    let pass = within(h, 0.0011, 0.005) && within(c, -0.0002, 0.005) && within(t, 0.4539, 0.02) && within(rmse, 0.0660, 0.01);
    out.report(
        "C1",
        pass && r.failures == 0,
        format!("case 1, n=5000, {} reps: bias b1 hat {h:.4}, cens {c:.4}, tilde {t:.4}; rmse b1 cens {rmse:.4}", r.replications_used),
    );
    let cov = r.censored.coverage95[1];
    out.report("C9", (0.92..=0.97).contains(&cov), format!("95% Wald coverage of b2, case 1, n=5000: {cov:.4}"));
}

fn criterion2(out: &mut Outcome, case2: &McReport) {
    let t = case2.naive.bias[0];
    out.report(
        "C2",
        within(t, 0.0977, 0.01),
        format!("case 2, n=50000, {} reps: bias b1 tilde {t:.4}", case2.replications_used),
    );
}

fn criterion3(out: &mut Outcome) {
    let r = run_case(&McCase::reference(4, 10_000, 1000, SEED).unwrap()).unwrap();
    let (t, c) = (r.naive.bias[0], r.censored.bias[0]);
    out.report(
        "C3",
        within(t, 0.9079, 0.03) && within(c, -0.0259, 0.01),
        format!("case 4, n=10000, {} reps: bias b1 tilde {t:.4}, cens {c:.4}", r.replications_used),
    );
}

fn criterion4(out: &mut Outcome, reports: &[McReport]) {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in reports {
        let ok = (0.99..=1.6).contains(&r.ratio1)
            && r.ratio2 > r.ratio1
            && (r.case.label != "case4" || r.ratio2 >= 2.0 * r.ratio1);
        pass &= ok;
        parts.push(format!("{} {:.3}/{:.3}", r.case.label, r.ratio1, r.ratio2));
    }
    out.report("C4", pass, format!("n=50000, 1000 reps, ratio1/ratio2: {}", parts.join(", ")));
}

fn criterion5(out: &mut Outcome) {
    let cfg = ImputationConfig { n_grid: vec![250, 1000, 5000], replications: 20_000, ..ImputationConfig::default() };
    let rep = run_imputation_experiment(&cfg).unwrap();
    let p = &rep.points;
    let above = p.iter().all(|q| q.ratio1 > 1.0 && q.ratio2 > 1.0);
    let small = (1.0..=1.10).contains(&p[0].ratio1) && (1.0..=1.10).contains(&p[0].ratio2);
    let rising = p[2].ratio1 >= p[0].ratio1 && p[2].ratio2 >= p[0].ratio2;
    let detail = p.iter().map(|q| format!("n={} {:.4}/{:.4}", q.n, q.ratio1, q.ratio2)).collect::<Vec<_>>().join(", ");
    out.report("C5", above && small && rising, format!("{} reps, mse ratios tau1/tau3, tau2/tau3: {detail}", cfg.replications));
}

fn criterion6(out: &mut Outcome) {
    let tight = FitOptions { tolerance: 1e-13, ..FitOptions::default() };
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (s, _) = random_instance(seed, 500);
        let fit = fit_censored(&s, &DesignMatrix::intercept_only(s.len()), &tight).unwrap();
        let h = censored_hill_estimate(&s).unwrap();
        worst = worst.max((fit.theta[0].exp() - h).abs() / h);
    }
    let y = ParetoLaw::new(1.0, 2.0).unwrap().sample(4000, RngSeed(1)).unwrap();
    let (s, kept) = CensoredSample::exact(&y, None, Threshold::Fraction(0.25)).unwrap();
    let x: Vec<f64> = kept.iter().map(|&i| (i % 5) as f64).collect();
    let d = DesignMatrix::with_intercept(&[("x", &x)]).unwrap();
    // With nc = 0 the censored and uncensored objectives coincide.
    let a = fit_censored(&s, &d, &tight).unwrap();
    let b = fit_exact(&s, &d, &tight).unwrap();
    let nc0 = a.theta.iter().zip(&b.theta).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let hill = hill_estimate(&y, HillCut::Count(1000)).unwrap();
    let io = fit_censored(&s, &DesignMatrix::intercept_only(s.len()), &tight).unwrap();
    let to_hill = ((io.theta[0].exp() - hill) / hill).abs().max(((censored_hill_estimate(&s).unwrap() - hill) / hill).abs());
    out.report(
        "C6",
        worst < 1e-10 && nc0 < 1e-10 && to_hill < 1e-10,
        format!("intercept-only vs censored Hill {worst:.1e}, nc=0 fits {nc0:.1e}, vs Hill {to_hill:.1e}"),
    );
}

fn criterion7(out: &mut Outcome, reports: &[McReport]) {
    let mut grad_err: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for seed in 0..100 {
        let (s, d) = random_instance(seed, 150);
        let mut rng = RngSeed(seed ^ 0xabcdef).rng();
        let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = neg_loglik_gradient(&theta, &s, &d).unwrap();
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..3 {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (neg_loglik_censored(&up, &s, &d).unwrap() - neg_loglik_censored(&dn, &s, &d).unwrap()) / (2.0 * h);
            grad_err = grad_err.max((fd - g[j]).abs() / scale);
        }
        min_eig = min_eig.min(SymmetricEigen::new(neg_loglik_hessian(&theta, &s, &d).unwrap()).eigenvalues.min());
    }
    let (mut within, mut total, mut max_iter) = (0.0, 0usize, 0usize);
    for r in reports {
        within += r.censored.share_within_50_iterations.min(r.uncensored.share_within_50_iterations).min(r.naive.share_within_50_iterations)
            * r.replications_used as f64;
        total += r.metadata.replications_requested;
        max_iter = max_iter.max(r.censored.max_iterations).max(r.uncensored.max_iterations).max(r.naive.max_iterations);
    }
    let share = within / total as f64;
    out.report(
        "C7",
        grad_err < 1e-6 && min_eig >= -1e-10 && share >= 0.999,
        format!(
            "gradient rel err {grad_err:.1e}, min Hessian eigenvalue {min_eig:.2e}, Newton from 0 within 50 steps {:.2}% (max {max_iter})",
            100.0 * share
        ),
    );
}

fn criterion8(out: &mut Outcome) {
    let p = ParetoLaw::new(1.0, 3.0).unwrap();
    let b = BurrLaw::new(2.0, -2.0).unwrap();
    let mut trip: f64 = 0.0;
    for i in 1..10_000 {
        let u = i as f64 / 10_000.0;
        trip = trip.max((p.cdf(p.quantile(u).unwrap()).unwrap() - u).abs());
        trip = trip.max((b.cdf(b.quantile(u).unwrap()).unwrap() - u).abs());
    }
    let y = p.sample(1_000_000, SEED).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut z = b.sample(100_000, SEED).unwrap();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let ks = z.iter().enumerate().fold(0.0f64, |m, (i, &v)| {
        let f = b.cdf(v).unwrap();
        m.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    });
    out.report(
        "C8",
        trip < 1e-12 && (mean / 1.5 - 1.0).abs() < 0.01 && ks < 0.01,
        format!("round-trip {trip:.1e}, Pareto(3) mean {mean:.4}, Burr sup distance {ks:.4}"),
    );
}

fn criterion10(out: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("fixture.csv");
    write_fixture(&input, 80_000, 1);
    let o = dir.path().join("out");
    let flags = [
        "--input", input.to_str().unwrap(), "--outcome", "y", "--topcode", "3.5", "--k", "0.2", "--period", "year",
        "--continuous", "x", "--categorical", "female:0", "--out-dir", o.to_str().unwrap(),
    ];
    let run = |cmd: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_toptail")).arg(cmd).args(flags).stdout(Stdio::null()).status().unwrap();
        status.success()
    };
    if !(run("fit") && run("effects")) {
        out.report("C10", false, "command failed".into());
        return;
    }
    let fits: Vec<PeriodFitReport> = serde_json::from_slice(&std::fs::read(o.join("fit.json")).unwrap()).unwrap();
    let effects: Vec<EffectRow> = serde_json::from_slice(&std::fs::read(o.join("effects.json")).unwrap()).unwrap();
    let mut worst_z: f64 = 0.0;
    for f in &fits {
        for (name, truth) in [("intercept", FIXTURE_THETA[0]), ("x", FIXTURE_THETA[1]), ("female_1", FIXTURE_THETA[2])] {
            let c = &f.coefficients[name];
            worst_z = worst_z.max((c.estimate - truth).abs() / c.std_error);
        }
    }
    let signs = effects.iter().all(|e| {
        let theta = fits.iter().find(|f| f.period == e.period).unwrap().coefficients[&e.covariate].estimate;
        e.delta_pct.signum() == -theta.signum()
    });
    out.report(
        "C10",
        worst_z < 4.0 && signs && effects.len() == 4,
        format!("fixture fit, largest |estimate - truth| / se = {worst_z:.2}; effect signs opposite to coefficients: {signs}"),
    );
}

fn main() -> ExitCode {
    let mut out = Outcome { failed: 0 };
    criterion8(&mut out);
    criterion6(&mut out);
    criterion10(&mut out);
    criterion1_and_9(&mut out);
    criterion3(&mut out);
    let large: Vec<McReport> =
        (1..=6).map(|c| run_case(&zero_init(McCase::reference(c, 50_000, 1000, SEED).unwrap())).unwrap()).collect();
    criterion2(&mut out, &large[1]);
    criterion4(&mut out, &large);
    criterion7(&mut out, &large);
    criterion5(&mut out);
    println!("{} criteria failed", out.failed);
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
