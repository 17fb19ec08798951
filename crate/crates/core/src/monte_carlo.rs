//! Simulation harness for the finite-sample studies: bias and RMSE of the
//! three tail-index regressions (uncensored data, censored model, censoring
//! ignored) and the MSE of the top-code imputations.
//!
//! Every replication draws from its own ChaCha stream, and per-replication
//! results are reduced in replication order, so serial and parallel runs
//! give bit-identical reports.

use std::time::Instant;

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{censored_hill_estimate, hill_on_sample, CensoredSample};
use crate::design::DesignMatrix;
use crate::distributions::{BurrLaw, InverseCdf, ParetoLaw, RngSeed, GENERATOR_ID};
use crate::error::{Result, TailError};
use crate::imputation::{tau1, tau2, tau3};
use crate::regression::{fit_censored, fit_exact, FitOptions, TailRegressionFit, Z_95};
use crate::threshold::{empirical_quantile, tail_count, Threshold};

/// Failure share above which a report is flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Dgp {
    /// Pareto with unit scale.
    Pareto,
    Burr { rho: f64 },
}

impl Dgp {
    fn draw<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        match *self {
            Dgp::Pareto => ParetoLaw::new(1.0, alpha).expect("positive index").quantile_open(u),
            Dgp::Burr { rho } => BurrLaw::new(alpha, rho).expect("valid Burr").quantile_open(u),
        }
    }

    fn survival(&self, alpha: f64, y: f64) -> f64 {
        match *self {
            Dgp::Pareto => {
                if y <= 1.0 {
                    1.0
                } else {
                    y.powf(-alpha)
                }
            }
            Dgp::Burr { rho } => BurrLaw::new(alpha, rho).and_then(|l| l.survival(y)).unwrap_or(1.0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Dgp::Pareto => "pareto".into(),
            Dgp::Burr { rho } => format!("burr(rho={rho})"),
        }
    }
}

/// Where the top-code comes from in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorRule {
    /// Empirical quantile of the replication's own uncensored draw.
    #[default]
    Empirical,
    /// Quantile of the population marginal law, fixed across replications.
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCase {
    pub label: String,
    pub dgp: Dgp,
    pub k: f64,
    pub censor_quantile: f64,
    pub n: usize,
    pub replications: usize,
    /// `(beta1, beta2)` in `alpha(x) = exp(beta1 + beta2 x)`, `x ~ U(0, 1)`.
    pub beta: [f64; 2],
    pub seed: RngSeed,
    #[serde(default)]
    pub censor_rule: CensorRule,
    #[serde(default)]
    pub fit: FitOptions,
}

impl McCase {
    /// One of the six reference designs (1-based).
    pub fn reference(case: u8, n: usize, replications: usize, seed: RngSeed) -> Result<Self> {
        let burr = Dgp::Burr { rho: -2.0 };
        let (dgp, k, q) = match case {
            1 => (Dgp::Pareto, 0.20, 0.95),
            2 => (Dgp::Pareto, 0.20, 0.99),
            3 => (burr, 0.05, 0.99),
            4 => (burr, 0.10, 0.95),
            5 => (burr, 0.20, 0.99),
            6 => (burr, 0.20, 0.95),
            _ => return Err(TailError::Config(format!("reference cases are 1..=6, got {case}"))),
        };
        Ok(Self {
            label: format!("case{case}"),
            dgp,
            k,
            censor_quantile: q,
            n,
            replications,
            beta: [1.0, 1.0],
            seed,
            censor_rule: CensorRule::Empirical,
            fit: FitOptions::default(),
        })
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(TailError::Config("replications must be at least 1".into()));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(TailError::Config(format!("tail fraction must lie in (0, 1), got {}", self.k)));
        }
        if !(self.censor_quantile > 0.0 && self.censor_quantile < 1.0) {
            return Err(TailError::Config(format!("censor quantile must lie in (0, 1), got {}", self.censor_quantile)));
        }
        if tail_count(self.k, self.n) < 2 || tail_count(self.k, self.n) >= self.n {
            return Err(TailError::Config(format!(
                "n = {} with k = {} gives floor(k n) = {}, fewer than the 2 coefficients",
                self.n,
                self.k,
                tail_count(self.k, self.n)
            )));
        }
        if let Dgp::Burr { rho } = self.dgp {
            if !(rho < 0.0) {
                return Err(TailError::Config(format!("Burr rho must be negative, got {rho}")));
            }
        }
        Ok(())
    }
}

/// Population quantile of the marginal law of `y` when `x ~ U(0, 1)`.
pub fn population_quantile(dgp: Dgp, beta: [f64; 2], q: f64) -> f64 {
    // composite Simpson over x, bisection over log y
    let nodes = 2000;
    let marginal_survival = |y: f64| {
        let h = 1.0 / nodes as f64;
        let mut acc = 0.0;
        for j in 0..=nodes {
            let x = j as f64 * h;
            let wgt = if j == 0 || j == nodes { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += wgt * dgp.survival((beta[0] + beta[1] * x).exp(), y);
        }
        acc * h / 3.0
    };
    let target = 1.0 - q;
    let (mut lo, mut hi) = (-30.0_f64, 30.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if marginal_survival(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub bias: [f64; 2],
    pub rmse: [f64; 2],
    /// RMSE of fitted `alpha(x_i)`, pooled over replications and individuals.
    pub rmse_alpha: f64,
    /// Share of replications whose 95% Wald interval covers each `beta_j`.
    pub coverage95: [f64; 2],
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub share_within_50_iterations: f64,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMetadata {
    pub seed: RngSeed,
    pub generator: String,
    pub replications_requested: usize,
    /// Wall-clock seconds; excluded from serialized reports so that repeated
    /// runs write identical files.
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub case: McCase,
    /// Fit on the uncensored draw.
    pub uncensored: EstimatorSummary,
    /// Censored model on the top-coded draw.
    pub censored: EstimatorSummary,
    /// Uncensored model on the top-coded draw.
    pub naive: EstimatorSummary,
    /// `RMSE(censored alpha) / RMSE(uncensored alpha)`.
    pub ratio1: f64,
    /// `RMSE(naive alpha) / RMSE(uncensored alpha)`.
    pub ratio2: f64,
    pub replications_used: usize,
    pub failures: usize,
    pub flagged: bool,
    pub metadata: McMetadata,
}

#[derive(Debug, Clone, Copy)]
struct FitRecord {
    theta: [f64; 2],
    se: [f64; 2],
    sq_err_alpha: f64,
    iterations: usize,
    converged: bool,
}

type Replication = Option<[FitRecord; 3]>;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.total + v;
        if self.total.abs() >= v.abs() {
            self.carry += (self.total - t) + v;
        } else {
            self.carry += (v - t) + self.total;
        }
        self.total = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.total + self.carry
    }
}

fn record(fit: &TailRegressionFit, xs: &[f64], alphas: &[f64]) -> Option<FitRecord> {
    if !fit.converged || fit.theta.len() != 2 {
        return None;
    }
    let mut sq = Sum::default();
    for (x, a) in xs.iter().zip(alphas) {
        let d = (fit.theta[0] + fit.theta[1] * x).exp() - a;
        sq.add(d * d);
    }
    Some(FitRecord {
        theta: [fit.theta[0], fit.theta[1]],
        se: [fit.std_errors[0], fit.std_errors[1]],
        sq_err_alpha: sq.value(),
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

/// Covariates, true indices and outcomes for one replication.
fn simulate<R: Rng + ?Sized>(dgp: Dgp, beta: [f64; 2], n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random();
        let a = (beta[0] + beta[1] * x).exp();
        xs.push(x);
        alphas.push(a);
        ys.push(dgp.draw(a, rng));
    }
    (xs, alphas, ys)
}

fn tail_design(xs: &[f64], retained: &[usize]) -> DesignMatrix {
    let sel: Vec<f64> = retained.iter().map(|&i| xs[i]).collect();
    DesignMatrix::with_intercept(&[("x", &sel)]).expect("finite uniforms")
}

fn replicate(case: &McCase, y_c_fixed: Option<f64>, rep: usize) -> Replication {
    let mut rng = case.seed.stream(rep as u64);
    let (xs, alphas, ys) = simulate(case.dgp, case.beta, case.n, &mut rng);
    let y_c = match y_c_fixed {
        Some(v) => v,
        None => empirical_quantile(&ys, case.censor_quantile).ok()?,
    };
    let threshold = Threshold::Fraction(case.k);

    let (full, kept) = CensoredSample::exact(&ys, None, threshold).ok()?;
    let hat = fit_censored(&full, &tail_design(&xs, &kept), &case.fit).ok()?;

    let (cens, kept_c) = CensoredSample::from_top_coded(&ys, None, y_c, threshold, 0.0).ok()?;
    let design_c = tail_design(&xs, &kept_c);
    let cfit = fit_censored(&cens, &design_c, &case.fit).ok()?;
    let naive = fit_exact(&cens, &design_c, &case.fit).ok()?;

    Some([record(&hat, &xs, &alphas)?, record(&cfit, &xs, &alphas)?, record(&naive, &xs, &alphas)?])
}

fn summarize_estimator(reps: &[[FitRecord; 3]], which: usize, beta: [f64; 2], n: usize) -> EstimatorSummary {
    let mut bias = [Sum::default(); 2];
    let mut sq = [Sum::default(); 2];
    let mut cover = [0usize; 2];
    let mut alpha_sq = Sum::default();
    let mut iters = Sum::default();
    let mut max_iter = 0;
    let mut within = 0;
    let mut nonconverged = 0;
    for r in reps {
        let f = &r[which];
        for j in 0..2 {
            let e = f.theta[j] - beta[j];
            bias[j].add(e);
            sq[j].add(e * e);
            if e.abs() <= Z_95 * f.se[j] {
                cover[j] += 1;
            }
        }
        alpha_sq.add(f.sq_err_alpha);
        iters.add(f.iterations as f64);
        max_iter = max_iter.max(f.iterations);
        if f.iterations <= 50 {
            within += 1;
        }
        if !f.converged {
            nonconverged += 1;
        }
    }
    let m = reps.len() as f64;
    EstimatorSummary {
        bias: [bias[0].value() / m, bias[1].value() / m],
        rmse: [(sq[0].value() / m).sqrt(), (sq[1].value() / m).sqrt()],
        rmse_alpha: (alpha_sq.value() / (m * n as f64)).sqrt(),
        coverage95: [cover[0] as f64 / m, cover[1] as f64 / m],
        mean_iterations: iters.value() / m,
        max_iterations: max_iter,
        share_within_50_iterations: within as f64 / m,
        nonconverged,
    }
}

/// Runs every replication of a case, in parallel.
pub fn run_case(case: &McCase) -> Result<McReport> {
    case.validate()?;
    let started = Instant::now();
    let y_c_fixed = match case.censor_rule {
        CensorRule::Empirical => None,
        CensorRule::Population => Some(population_quantile(case.dgp, case.beta, case.censor_quantile)),
    };
    let outcomes: Vec<Replication> =
        (0..case.replications).into_par_iter().map(|rep| replicate(case, y_c_fixed, rep)).collect();
    let reps: Vec<[FitRecord; 3]> = outcomes.into_iter().flatten().collect();
    let failures = case.replications - reps.len();
    if reps.is_empty() {
        return Err(TailError::Data(format!("all {} replications of {} failed", case.replications, case.label)));
    }
    let uncensored = summarize_estimator(&reps, 0, case.beta, case.n);
    let censored = summarize_estimator(&reps, 1, case.beta, case.n);
    let naive = summarize_estimator(&reps, 2, case.beta, case.n);
    Ok(McReport {
        ratio1: censored.rmse_alpha / uncensored.rmse_alpha,
        ratio2: naive.rmse_alpha / uncensored.rmse_alpha,
        uncensored,
        censored,
        naive,
        replications_used: reps.len(),
        failures,
        flagged: failures as f64 > FAILURE_FLAG_SHARE * case.replications as f64,
        metadata: McMetadata {
            seed: case.seed,
            generator: GENERATOR_ID.into(),
            replications_requested: case.replications,
            runtime_secs: started.elapsed().as_secs_f64(),
        },
        case: case.clone(),
    })
}

/// How imputation errors are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationTarget {
    /// Squared error against the realised mean of the censored `y_i`; the
    /// conditional imputation is averaged over the censored individuals.
    GroupMean,
    /// Squared error of each individual's imputation against its own `y_i`.
    #[default]
    Individual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputationConfig {
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub beta: [f64; 2],
    pub censor_quantile: f64,
    pub threshold: Threshold,
    pub seed: RngSeed,
    pub target: ImputationTarget,
    pub fit: FitOptions,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![250, 500, 1000, 2000, 5000, 20000],
            replications: 2000,
            beta: [1.0, 2.0],
            censor_quantile: 0.95,
            threshold: Threshold::Level(1.0),
            seed: RngSeed(2020),
            target: ImputationTarget::Individual,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationPoint {
    pub n: usize,
    pub mse_tau1: f64,
    pub mse_tau2: f64,
    pub mse_tau3: f64,
    /// `MSE(tau1) / MSE(tau3)`.
    pub ratio1: f64,
    /// `MSE(tau2) / MSE(tau3)`.
    pub ratio2: f64,
    pub replications_used: usize,
    pub failures: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub config: ImputationConfig,
    pub points: Vec<ImputationPoint>,
    pub metadata: McMetadata,
}

fn imputation_replication(cfg: &ImputationConfig, n: usize, rep: usize) -> Option<[f64; 3]> {
    let stream = ((n as u64) << 32) | rep as u64;
    let mut rng = cfg.seed.stream(stream);
    let (xs, _, ys) = simulate(Dgp::Pareto, cfg.beta, n, &mut rng);
    let y_c = empirical_quantile(&ys, cfg.censor_quantile).ok()?;
    let (sample, kept) = CensoredSample::from_top_coded(&ys, None, y_c, cfg.threshold, 0.0).ok()?;
    let design = tail_design(&xs, &kept);
    let t1 = tau1(hill_on_sample(&sample).ok()?, y_c).ok()?;
    let t2 = tau2(censored_hill_estimate(&sample).ok()?, y_c).ok()?;
    let fit = fit_censored(&sample, &design, &cfg.fit).ok()?;
    if !fit.converged {
        return None;
    }
    let mut truth = Vec::new();
    let mut t3 = Vec::new();
    for (row, &raw) in kept.iter().enumerate() {
        if sample.censored()[row] {
            truth.push(ys[raw]);
            t3.push(tau3(&fit, design.row(row), y_c).ok()?);
        }
    }
    if truth.is_empty() {
        return None;
    }
    let m = truth.len() as f64;
    match cfg.target {
        ImputationTarget::GroupMean => {
            let target = truth.iter().sum::<f64>() / m;
            let t3_mean = t3.iter().sum::<f64>() / m;
            Some([(t1 - target).powi(2), (t2 - target).powi(2), (t3_mean - target).powi(2)])
        }
        ImputationTarget::Individual => {
            let se = |pred: &dyn Fn(usize) -> f64| truth.iter().enumerate().map(|(i, y)| (pred(i) - y).powi(2)).sum::<f64>() / m;
            Some([se(&|_| t1), se(&|_| t2), se(&|i| t3[i])])
        }
    }
}

/// Runs the imputation experiment over `cfg.n_grid`.
pub fn run_imputation_experiment(cfg: &ImputationConfig) -> Result<ImputationReport> {
    if cfg.replications == 0 {
        return Err(TailError::Config("replications must be at least 1".into()));
    }
    if cfg.n_grid.is_empty() {
        return Err(TailError::Config("empty sample-size grid".into()));
    }
    for &n in &cfg.n_grid {
        let m = match cfg.threshold {
            Threshold::Fraction(k) => tail_count(k, n),
            Threshold::Level(_) => n,
        };
        if m < 2 || tail_count(1.0 - cfg.censor_quantile, n) == 0 {
            return Err(TailError::Config(format!(
                "n = {n} too small: {m} tail observations and no top-coded observation guaranteed"
            )));
        }
    }
    let started = Instant::now();
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let outcomes: Vec<Option<[f64; 3]>> =
            (0..cfg.replications).into_par_iter().map(|rep| imputation_replication(cfg, n, rep)).collect();
        let mut acc = [Sum::default(); 3];
        let mut used = 0;
        for o in outcomes.iter().flatten() {
            used += 1;
            for j in 0..3 {
                acc[j].add(o[j]);
            }
        }
        if used == 0 {
            return Err(TailError::Data(format!("all replications failed at n = {n}")));
        }
        let mse = acc.map(|s| s.value() / used as f64);
        let failures = cfg.replications - used;
        points.push(ImputationPoint {
            n,
            mse_tau1: mse[0],
            mse_tau2: mse[1],
            mse_tau3: mse[2],
            ratio1: mse[0] / mse[2],
            ratio2: mse[1] / mse[2],
            replications_used: used,
            failures,
            flagged: failures as f64 > FAILURE_FLAG_SHARE * cfg.replications as f64,
        });
    }
    Ok(ImputationReport {
        config: cfg.clone(),
        points,
        metadata: McMetadata {
            seed: cfg.seed,
            generator: GENERATOR_ID.into(),
            replications_requested: cfg.replications,
            runtime_secs: started.elapsed().as_secs_f64(),
        },
    })
}

/// One row of the bias/RMSE table: a case and sample size, with bias and
/// RMSE of both coefficients under each estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTableRow {
    pub case: String,
    pub dgp: String,
    pub k: f64,
    pub censor_quantile: f64,
    pub n: usize,
    pub replications_used: usize,
    pub hat_bias_b1: f64,
    pub hat_bias_b2: f64,
    pub hat_rmse_b1: f64,
    pub hat_rmse_b2: f64,
    pub cens_bias_b1: f64,
    pub cens_bias_b2: f64,
    pub cens_rmse_b1: f64,
    pub cens_rmse_b2: f64,
    pub tilde_bias_b1: f64,
    pub tilde_bias_b2: f64,
    pub tilde_rmse_b1: f64,
    pub tilde_rmse_b2: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub case: String,
    pub n: usize,
    pub ratio1: f64,
    pub ratio2: f64,
}

/// Table rows in report order, rounded to six significant digits.
pub fn summarize(reports: &[McReport]) -> Vec<BiasTableRow> {
    use crate::io::sig6;
    reports
        .iter()
        .map(|r| BiasTableRow {
            case: r.case.label.clone(),
            dgp: r.case.dgp.label(),
            k: r.case.k,
            censor_quantile: r.case.censor_quantile,
            n: r.case.n,
            replications_used: r.replications_used,
            hat_bias_b1: sig6(r.uncensored.bias[0]),
            hat_bias_b2: sig6(r.uncensored.bias[1]),
            hat_rmse_b1: sig6(r.uncensored.rmse[0]),
            hat_rmse_b2: sig6(r.uncensored.rmse[1]),
            cens_bias_b1: sig6(r.censored.bias[0]),
            cens_bias_b2: sig6(r.censored.bias[1]),
            cens_rmse_b1: sig6(r.censored.rmse[0]),
            cens_rmse_b2: sig6(r.censored.rmse[1]),
            tilde_bias_b1: sig6(r.naive.bias[0]),
            tilde_bias_b2: sig6(r.naive.bias[1]),
            tilde_rmse_b1: sig6(r.naive.rmse[0]),
            tilde_rmse_b2: sig6(r.naive.rmse[1]),
            flagged: r.flagged,
        })
        .collect()
}

pub fn ratio_rows(reports: &[McReport]) -> Vec<RatioRow> {
    use crate::io::sig6;
    reports
        .iter()
        .map(|r| RatioRow { case: r.case.label.clone(), n: r.case.n, ratio1: sig6(r.ratio1), ratio2: sig6(r.ratio2) })
        .collect()
}

pub fn bias_table_to_csv(rows: &[BiasTableRow]) -> Result<String> {
    crate::io::to_csv(rows)
}

pub fn parse_bias_table_csv(text: &str) -> Result<Vec<BiasTableRow>> {
    crate::io::from_csv(text)
}
