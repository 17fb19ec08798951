//! Conditional tail-index regression `alpha(x) = exp(x' theta)` for
//! top-coded outcomes.
//!
//! The objective is the negative censored log-likelihood over the retained
//! tail,
//!
//! ```text
//! K(theta) = sum_unc  wt_i (exp(x_i' theta) log(w_i / y0) - x_i' theta)
//!          + sum_cens wt_i  exp(x_i' theta) log(y_c / y0)
//! ```
//!
//! Every Hessian weight `exp(x' theta) log(w / y0)` is nonnegative, so `K` is
//! convex and a damped Newton iteration started anywhere reaches the unique
//! minimiser when the design has full rank.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::classical::{censored_hill_estimate, CensoredSample};
use crate::design::DesignMatrix;
use crate::error::{Result, TailError};
pub use crate::threshold::{select_threshold, Threshold};

/// Two-sided standard normal critical values at 10%, 5% and 1%.
pub const Z_90: f64 = 1.644_853_626_951_472_2;
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zero,
    /// Intercept at `log` of the censored Hill estimate, slopes at zero.
    CensoredHill,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Bound on the max-norm of the gradient divided by the total weight.
    pub tolerance: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iter: 200, init: Init::CensoredHill }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRegressionFit {
    pub column_names: Vec<String>,
    pub theta: Vec<f64>,
    /// Sandwich covariance `H^-1 S H^-1`.
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Fitted `exp(x_i' theta)` per retained observation.
    pub alpha: Vec<f64>,
    /// `1 - (y0 / y_c)^alpha_i`, the conditional variance of the score residual.
    pub lambda: Vec<f64>,
    /// Weighted covariate means over the retained tail.
    pub x_mean: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub censored: Vec<bool>,
    pub n0: usize,
    pub nc: usize,
    pub y0: f64,
    /// `None` when the fit treats every observation as exact.
    pub y_c: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

impl TailRegressionFit {
    pub fn p(&self) -> usize {
        self.theta.len()
    }

    pub fn alpha_at(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.theta).map(|(a, b)| a * b).sum::<f64>().exp()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.column_names.iter().position(|n| n == name).map(|j| self.theta[j])
    }

    /// Wald interval `theta_j +- z se_j`.
    pub fn wald_interval(&self, j: usize, z: f64) -> (f64, f64) {
        (self.theta[j] - z * self.std_errors[j], self.theta[j] + z * self.std_errors[j])
    }
}

/// Per-observation score residual and curvature at `theta`.
struct Terms {
    value: f64,
    residual: f64,
    curvature: f64,
}

fn check_dims(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<()> {
    if design.nrows() != sample.len() {
        return Err(TailError::Dimension { expected: sample.len(), got: design.nrows() });
    }
    if theta.len() != design.ncols() {
        return Err(TailError::Dimension { expected: design.ncols(), got: theta.len() });
    }
    Ok(())
}

#[inline]
fn terms(index: f64, log_excess: f64, censored: bool) -> Terms {
    let a = index.exp();
    let al = if log_excess == 0.0 { 0.0 } else { a * log_excess };
    if censored {
        Terms { value: al, residual: al, curvature: al }
    } else {
        Terms { value: al - index, residual: al - 1.0, curvature: al }
    }
}

struct Evaluator<'a> {
    sample: &'a CensoredSample,
    design: &'a DesignMatrix,
    log_excess: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(sample: &'a CensoredSample, design: &'a DesignMatrix) -> Self {
        let y0 = sample.y0();
        let log_excess = sample
            .values()
            .iter()
            .zip(sample.censored())
            .map(|(&w, &c)| if c { (sample.y_c() / y0).ln() } else { (w / y0).ln() })
            .collect();
        Self { sample, design, log_excess }
    }

    fn term(&self, i: usize, theta: &[f64]) -> Terms {
        terms(self.design.dot(i, theta), self.log_excess[i], self.sample.censored()[i])
    }

    fn value(&self, theta: &[f64]) -> f64 {
        (0..self.sample.len()).map(|i| self.sample.weight(i) * self.term(i, theta).value).sum()
    }

    fn value_gradient_hessian(&self, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = theta.len();
        let mut f = 0.0;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for i in 0..self.sample.len() {
            let wt = self.sample.weight(i);
            let t = self.term(i, theta);
            let x = self.design.row(i);
            f += wt * t.value;
            for a in 0..p {
                g[a] += wt * t.residual * x[a];
                let ca = wt * t.curvature * x[a];
                for b in 0..=a {
                    h[(a, b)] += ca * x[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        (f, g, h)
    }
}

pub fn neg_loglik_censored(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<f64> {
    check_dims(theta, sample, design)?;
    Ok(Evaluator::new(sample, design).value(theta))
}

/// Score `sum_i wt_i e_i x_i`.
pub fn neg_loglik_gradient(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<Vec<f64>> {
    check_dims(theta, sample, design)?;
    let (_, g, _) = Evaluator::new(sample, design).value_gradient_hessian(theta);
    Ok(g.iter().copied().collect())
}

pub fn neg_loglik_hessian(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<DMatrix<f64>> {
    check_dims(theta, sample, design)?;
    let (_, _, h) = Evaluator::new(sample, design).value_gradient_hessian(theta);
    Ok(h)
}

/// Score residuals `e_i`: `alpha_i log(w_i / y0) - 1` when uncensored and
/// `alpha_i log(y_c / y0)` when censored.
pub fn score_residuals(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<Vec<f64>> {
    check_dims(theta, sample, design)?;
    let ev = Evaluator::new(sample, design);
    Ok((0..sample.len()).map(|i| ev.term(i, theta).residual).collect())
}

fn check_rank(sample: &CensoredSample, design: &DesignMatrix) -> Result<()> {
    let p = design.ncols();
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    for i in 0..design.nrows() {
        let w = sample.weight(i);
        let x = design.row(i);
        for a in 0..p {
            for b in 0..p {
                xtx[(a, b)] += w * x[a] * x[b];
            }
        }
    }
    let eig = SymmetricEigen::new(xtx).eigenvalues;
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-10 * max {
        return Err(TailError::RankDeficient(format!(
            "weighted X'X over the retained tail has eigenvalue range [{min:.3e}, {max:.3e}]"
        )));
    }
    Ok(())
}

/// Sandwich covariance, t statistics and `Lambda_i` at `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub lambda: Vec<f64>,
}

pub fn covariance_and_tests(theta: &[f64], sample: &CensoredSample, design: &DesignMatrix) -> Result<Inference> {
    check_dims(theta, sample, design)?;
    let ev = Evaluator::new(sample, design);
    let (_, _, h) = ev.value_gradient_hessian(theta);
    let p = theta.len();
    let mut s = DMatrix::<f64>::zeros(p, p);
    let mut lambda = Vec::with_capacity(sample.len());
    let ratio_log = (sample.y0() / sample.y_c()).ln();
    for i in 0..sample.len() {
        let wt = sample.weight(i);
        let e = ev.term(i, theta).residual;
        let x = design.row(i);
        for a in 0..p {
            for b in 0..p {
                s[(a, b)] += wt * wt * e * e * x[a] * x[b];
            }
        }
        let index = design.dot(i, theta).exp();
        lambda.push(-(index * ratio_log).exp_m1());
    }
    let h_inv = h
        .cholesky()
        .ok_or_else(|| TailError::Singular("Hessian at the estimate is not positive definite".into()))?
        .inverse();
    let cov = &h_inv * s * &h_inv;
    let covariance: Vec<Vec<f64>> =
        (0..p).map(|a| (0..p).map(|b| 0.5 * (cov[(a, b)] + cov[(b, a)])).collect()).collect();
    let std_errors: Vec<f64> = (0..p).map(|j| covariance[j][j].max(0.0).sqrt()).collect();
    let t_stats = theta.iter().zip(&std_errors).map(|(t, se)| t / se).collect();
    Ok(Inference { covariance, std_errors, t_stats, lambda })
}

fn initial_theta(sample: &CensoredSample, design: &DesignMatrix, init: &Init) -> Result<Vec<f64>> {
    let p = design.ncols();
    match init {
        Init::Zero => Ok(vec![0.0; p]),
        Init::CensoredHill => {
            let mut theta = vec![0.0; p];
            if design.has_intercept() {
                if let Ok(a) = censored_hill_estimate(sample) {
                    theta[0] = a.ln();
                }
            }
            Ok(theta)
        }
        Init::Given(t) => {
            if t.len() != p {
                return Err(TailError::Dimension { expected: p, got: t.len() });
            }
            Ok(t.clone())
        }
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct NewtonOutcome {
    theta: Vec<f64>,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
}

fn newton(ev: &Evaluator, mut theta: Vec<f64>, opts: &FitOptions) -> NewtonOutcome {
    let total_weight: f64 = (0..ev.sample.len()).map(|i| ev.sample.weight(i)).sum::<f64>().max(f64::MIN_POSITIVE);
    let p = theta.len();
    let mut iterations = 0;
    let (mut f, mut g, mut h) = ev.value_gradient_hessian(&theta);
    let mut gnorm = max_abs(&g) / total_weight;
    let mut converged = gnorm < opts.tolerance;

    while !converged && iterations < opts.max_iter {
        let neg_g = -&g;
        let mut dir = h.clone().cholesky().map(|c| c.solve(&neg_g));
        if let Some(d) = &dir {
            if !(d.dot(&g) < 0.0) || d.iter().any(|v| !v.is_finite()) {
                dir = None;
            }
        }
        // gradient fallback when the Hessian is near singular
        let dir = dir.unwrap_or_else(|| neg_g.clone() / total_weight);
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..p).map(|j| theta[j] + step * dir[j]).collect();
            let ft = ev.value(&trial);
            // rounding-level slack lets the iteration finish near the optimum
            if ft <= f + 1e-4 * step * slope || (step == 1.0 && ft <= f + 1e-12 * f.abs().max(1.0)) {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        theta = next;
        iterations += 1;
        (f, g, h) = ev.value_gradient_hessian(&theta);
        gnorm = max_abs(&g) / total_weight;
        converged = gnorm < opts.tolerance;
    }

    if converged {
        // Newton polish: a couple of full steps while the gradient keeps shrinking.
        for _ in 0..2 {
            let Some(chol) = h.clone().cholesky() else { break };
            let d = chol.solve(&(-&g));
            let trial: Vec<f64> = (0..p).map(|j| theta[j] + d[j]).collect();
            let (ft, gt, ht) = ev.value_gradient_hessian(&trial);
            let gt_norm = max_abs(&gt) / total_weight;
            if !(gt_norm < gnorm) || !ft.is_finite() {
                break;
            }
            theta = trial;
            iterations += 1;
            (f, g, h) = (ft, gt, ht);
            gnorm = gt_norm;
        }
    }
    let _ = f;
    NewtonOutcome { theta, converged, iterations, gradient_norm: gnorm }
}

/// Minimises the censored negative log-likelihood over the given tail
/// `sample`; `design` rows are aligned with the sample.
pub fn fit_censored(sample: &CensoredSample, design: &DesignMatrix, opts: &FitOptions) -> Result<TailRegressionFit> {
    let p = design.ncols();
    check_dims(&vec![0.0; p], sample, design)?;
    if sample.uncensored_count() < p {
        return Err(TailError::InvalidSample(format!(
            "{} uncensored tail observations for {p} coefficients",
            sample.uncensored_count()
        )));
    }
    check_rank(sample, design)?;
    let ev = Evaluator::new(sample, design);
    let start = initial_theta(sample, design, &opts.init)?;
    let out = newton(&ev, start, opts);
    let inf = covariance_and_tests(&out.theta, sample, design)?;
    let alpha = (0..sample.len()).map(|i| design.dot(i, &out.theta).exp()).collect();
    Ok(TailRegressionFit {
        column_names: design.names().to_vec(),
        theta: out.theta,
        covariance: inf.covariance,
        std_errors: inf.std_errors,
        t_stats: inf.t_stats,
        alpha,
        lambda: inf.lambda,
        x_mean: design.weighted_means(sample.weights()),
        weights: sample.weights().map(<[f64]>::to_vec),
        censored: sample.censored().to_vec(),
        n0: sample.uncensored_count(),
        nc: sample.censored_count(),
        y0: sample.y0(),
        y_c: sample.y_c().is_finite().then_some(sample.y_c()),
        converged: out.converged,
        iterations: out.iterations,
        final_gradient_norm: out.gradient_norm,
    })
}

/// Fits the tail sample treating every value, including top-coded ones, as
/// exact. On censored data this is the inconsistent naive comparator.
pub fn fit_exact(sample: &CensoredSample, design: &DesignMatrix, opts: &FitOptions) -> Result<TailRegressionFit> {
    fit_censored(&sample.ignoring_censoring(), design, opts)
}

/// Uncensored tail-index regression on raw `values`: the threshold picks
/// the tail and `design` holds one row per raw value.
pub fn fit_uncensored(
    values: &[f64],
    weights: Option<&[f64]>,
    design: &DesignMatrix,
    threshold: Threshold,
    opts: &FitOptions,
) -> Result<TailRegressionFit> {
    if design.nrows() != values.len() {
        return Err(TailError::Dimension { expected: values.len(), got: design.nrows() });
    }
    let (sample, retained) = CensoredSample::exact(values, weights, threshold)?;
    fit_censored(&sample, &design.select(&retained), opts)
}
