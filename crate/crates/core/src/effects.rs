//! Partial effects of covariates on exceedance probabilities.
//!
//! With `alpha(x) = exp(x' theta)`, raising covariate `j` by `dx` changes the
//! probability of exceeding an extreme conditional quantile by
//! `((1 - u)^(theta_j dx) - 1) * 100` percent. A dummy switching from 0 to 1
//! changes it by `((1 - u)^(alpha(x; 1) / alpha(x; 0) - 1) - 1) * 100`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TailError};
use crate::regression::TailRegressionFit;

pub const DEFAULT_U: f64 = 0.15;
pub const DEFAULT_DELTA_X: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEffect {
    pub covariate: String,
    pub u: f64,
    pub delta_x: f64,
    /// Percentage change in the exceedance probability.
    pub delta_pct: f64,
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return domain(format!("tail probability level must lie in (0, 1), got {u}"));
    }
    Ok(())
}

pub fn partial_effect_continuous(theta_j: f64, u: f64, delta_x: f64) -> Result<f64> {
    check_u(u)?;
    Ok(((theta_j * delta_x) * (-u).ln_1p()).exp_m1() * 100.0)
}

/// Effect of a dummy at the covariate profile `x_base` (the fit's tail means
/// when `None`).
pub fn partial_effect_discrete(fit: &TailRegressionFit, dummy: &str, u: f64, x_base: Option<&[f64]>) -> Result<f64> {
    check_u(u)?;
    let j = fit
        .column_names
        .iter()
        .position(|n| n == dummy)
        .ok_or_else(|| TailError::Config(format!("dummy column '{dummy}' not in fit")))?;
    let base = x_base.unwrap_or(&fit.x_mean);
    if base.len() != fit.p() {
        return Err(TailError::Dimension { expected: fit.p(), got: base.len() });
    }
    let mut on = base.to_vec();
    let mut off = base.to_vec();
    on[j] = 1.0;
    off[j] = 0.0;
    let ratio = fit.alpha_at(&on) / fit.alpha_at(&off);
    Ok(((ratio - 1.0) * (-u).ln_1p()).exp_m1() * 100.0)
}

/// Quantile order in the full distribution of a conditional tail quantile:
/// `(1 - tail_mass) + (1 - u) * tail_mass`.
pub fn unconditional_quantile_order(u: f64, tail_mass: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("u must lie in [0, 1], got {u}"));
    }
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return domain(format!("tail mass must lie in (0, 1), got {tail_mass}"));
    }
    Ok((1.0 - tail_mass) + (1.0 - u) * tail_mass)
}

/// Mean fitted index over the estimation sample, optionally weighted.
pub fn average_tail_index(fit: &TailRegressionFit, weighted: bool) -> f64 {
    match (&fit.weights, weighted) {
        (Some(w), true) => {
            let total: f64 = w.iter().sum();
            fit.alpha.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() / total
        }
        _ => fit.alpha.iter().sum::<f64>() / fit.alpha.len() as f64,
    }
}

/// Effects for every non-intercept coefficient, ascending by `delta_pct`.
/// Columns listed in `dummies` use the discrete formula at the tail means.
pub fn effects_table(fit: &TailRegressionFit, dummies: &[String], u: f64, delta_x: f64) -> Result<Vec<PartialEffect>> {
    let mut out = Vec::new();
    for (j, name) in fit.column_names.iter().enumerate() {
        if j == 0 && name == "intercept" {
            continue;
        }
        let (delta_pct, dx) = if dummies.iter().any(|d| d == name) {
            (partial_effect_discrete(fit, name, u, None)?, 1.0)
        } else {
            (partial_effect_continuous(fit.theta[j], u, delta_x)?, delta_x)
        };
        out.push(PartialEffect { covariate: name.clone(), u, delta_x: dx, delta_pct });
    }
    out.sort_by(|a, b| a.delta_pct.total_cmp(&b.delta_pct));
    Ok(out)
}
