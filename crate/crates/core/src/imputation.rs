//! Imputation of outcomes above the top-code and the implied adjustment
//! factors `imputed / y_c`.

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Result, TailError};
use crate::regression::TailRegressionFit;

/// Default switch point between the median and mean branches of tau4.
pub const DEFAULT_SWITCH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Tau1,
    Tau2,
    Tau3,
    Tau4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Mean,
    Median,
}

/// Pareto mean above the top-code, `alpha / (alpha - 1) * y_c`.
pub fn pareto_conditional_mean(alpha: f64, y_c: f64) -> Result<f64> {
    if !(y_c > 0.0) {
        return Err(TailError::Domain(format!("top-code must be positive, got {y_c}")));
    }
    if !(alpha > 1.0) {
        return Err(TailError::Undefined(format!(
            "mean above the top-code does not exist for tail index {alpha} <= 1"
        )));
    }
    if alpha.is_infinite() {
        return Ok(y_c);
    }
    Ok(alpha / (alpha - 1.0) * y_c)
}

/// Imputation from a plain Hill estimate.
pub fn tau1(alpha_hat: f64, y_c: f64) -> Result<f64> {
    pareto_conditional_mean(alpha_hat, y_c)
}

/// Imputation from the censored Hill estimate.
pub fn tau2(alpha_censored_hill: f64, y_c: f64) -> Result<f64> {
    pareto_conditional_mean(alpha_censored_hill, y_c)
}

/// Conditional mean above `y_c` given the covariate row `x`.
pub fn tau3(fit: &TailRegressionFit, x: &[f64], y_c: f64) -> Result<f64> {
    check_row(fit, x)?;
    pareto_conditional_mean(fit.alpha_at(x), y_c)
}

/// Median branch `2^(1/alpha) y_c` for `alpha <= c`, mean branch otherwise.
pub fn tau4_from_alpha(alpha: f64, y_c: f64, switch: f64) -> Result<(f64, Branch)> {
    if !(alpha > 0.0) {
        return Err(TailError::Domain(format!("tail index must be positive, got {alpha}")));
    }
    if !(switch >= 1.0) {
        return Err(TailError::Config(format!("switch threshold must be at least 1, got {switch}")));
    }
    if alpha <= switch {
        Ok(((std::f64::consts::LN_2 / alpha).exp() * y_c, Branch::Median))
    } else {
        Ok((pareto_conditional_mean(alpha, y_c)?, Branch::Mean))
    }
}

pub fn tau4(fit: &TailRegressionFit, x: &[f64], y_c: f64, switch: f64) -> Result<(f64, Branch)> {
    check_row(fit, x)?;
    tau4_from_alpha(fit.alpha_at(x), y_c, switch)
}

fn check_row(fit: &TailRegressionFit, x: &[f64]) -> Result<()> {
    if x.len() != fit.p() {
        return Err(TailError::Dimension { expected: fit.p(), got: x.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedValue {
    /// Row index within the retained tail sample.
    pub row: usize,
    pub imputed: f64,
    pub factor: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationResult {
    pub estimator: Estimator,
    pub y_c: f64,
    pub values: Vec<ImputedValue>,
}

impl ImputationResult {
    /// Weighted mean of the adjustment factors.
    pub fn mean_factor(&self, weights: Option<&[f64]>) -> f64 {
        weighted_mean(self.values.iter().map(|v| (v.factor, weights.map_or(1.0, |w| w[v.row]))))
    }

    pub fn mean_imputed(&self, weights: Option<&[f64]>) -> f64 {
        weighted_mean(self.values.iter().map(|v| (v.imputed, weights.map_or(1.0, |w| w[v.row]))))
    }
}

fn weighted_mean(it: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, w) in it {
        num += v * w;
        den += w;
    }
    num / den
}

/// Conjunction of `column == value` conditions on the design.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub conditions: Vec<(String, f64)>,
}

impl Subgroup {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn label(&self) -> String {
        if self.conditions.is_empty() {
            "all".into()
        } else {
            self.conditions.iter().map(|(c, v)| format!("{c}={v}")).collect::<Vec<_>>().join("&")
        }
    }

    fn resolve(&self, design: &DesignMatrix) -> Result<Vec<(usize, f64)>> {
        self.conditions
            .iter()
            .map(|(c, v)| {
                design
                    .column_index(c)
                    .map(|j| (j, *v))
                    .ok_or_else(|| TailError::Config(format!("subgroup column '{c}' not in design")))
            })
            .collect()
    }
}

/// tau4 imputation for each top-coded row of a fitted tail sample,
/// optionally restricted to a subgroup.
pub fn impute_top_coded(
    fit: &TailRegressionFit,
    design: &DesignMatrix,
    subgroup: &Subgroup,
    switch: f64,
) -> Result<ImputationResult> {
    let y_c = fit
        .y_c
        .ok_or_else(|| TailError::Config("imputation needs a fit with a finite top-code".into()))?;
    if design.nrows() != fit.censored.len() {
        return Err(TailError::Dimension { expected: fit.censored.len(), got: design.nrows() });
    }
    let conds = subgroup.resolve(design)?;
    let mut values = Vec::new();
    let mut censored_total = 0;
    for i in 0..design.nrows() {
        if !fit.censored[i] {
            continue;
        }
        censored_total += 1;
        let x = design.row(i);
        if !conds.iter().all(|&(j, v)| x[j] == v) {
            continue;
        }
        let (imputed, branch) = tau4(fit, x, y_c, switch)?;
        values.push(ImputedValue { row: i, imputed, factor: imputed / y_c, branch });
    }
    if values.is_empty() {
        return Err(TailError::Data(format!(
            "subgroup '{}' has no top-coded observations ({censored_total} top-coded in total, {} tail rows)",
            subgroup.label(),
            design.nrows()
        )));
    }
    Ok(ImputationResult { estimator: Estimator::Tau4, y_c, values })
}

/// One period's inputs to the factor series.
pub struct PeriodFit<'a> {
    pub period: String,
    pub fit: &'a TailRegressionFit,
    pub design: &'a DesignMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPoint {
    pub year: String,
    pub group: String,
    pub factor: f64,
    pub imputed_mean: f64,
    pub n_topcoded: usize,
}

/// Mean tau4 / y_c over the top-coded individuals of each period.
pub fn adjustment_factor_series(periods: &[PeriodFit], subgroup: &Subgroup, switch: f64) -> Result<Vec<FactorPoint>> {
    periods
        .iter()
        .map(|p| {
            let res = impute_top_coded(p.fit, p.design, subgroup, switch)
                .map_err(|e| TailError::Data(format!("period {}: {e}", p.period)))?;
            let w = p.fit.weights.as_deref();
            Ok(FactorPoint {
                year: p.period.clone(),
                group: subgroup.label(),
                factor: res.mean_factor(w),
                imputed_mean: res.mean_imputed(w),
                n_topcoded: res.values.len(),
            })
        })
        .collect()
}
