//! Unconditional tail-index estimators: Hill and censored (top-coded) Hill.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TailError};
use crate::threshold::{self, Threshold};

/// Tail observations `w_i` with censoring flags, cut-off `y0` and top-code
/// `y_c`. Only observations used by the likelihood are stored; every value
/// lies in `[y0, y_c]` and a censored value equals `y_c` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    values: Vec<f64>,
    censored: Vec<bool>,
    y0: f64,
    y_c: f64,
    weights: Option<Vec<f64>>,
}

impl CensoredSample {
    pub fn new(values: Vec<f64>, censored: Vec<bool>, y0: f64, y_c: f64) -> Result<Self> {
        if values.len() != censored.len() {
            return Err(TailError::Dimension { expected: values.len(), got: censored.len() });
        }
        if values.is_empty() {
            return Err(TailError::InvalidSample("empty tail sample".into()));
        }
        if !(y0 > 0.0 && y0.is_finite()) {
            return Err(TailError::InvalidSample(format!("threshold y0 must be positive and finite, got {y0}")));
        }
        if !(y0 < y_c) {
            return Err(TailError::InvalidSample(format!("threshold y0 = {y0} must lie below the top-code {y_c}")));
        }
        for (i, (&w, &c)) in values.iter().zip(&censored).enumerate() {
            if c {
                if w != y_c {
                    return Err(TailError::InvalidSample(format!("censored observation {i} has value {w} != top-code {y_c}")));
                }
            } else if !(w >= y0 && w < y_c) {
                return Err(TailError::InvalidSample(format!(
                    "uncensored observation {i} = {w} outside [{y0}, {y_c})"
                )));
            }
        }
        Ok(Self { values, censored, y0, y_c, weights: None })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.values.len() {
            return Err(TailError::Dimension { expected: self.values.len(), got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(TailError::InvalidSample(format!("weights must be finite and nonnegative, got {w}")));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Builds the tail sample from raw top-coded outcomes. Values at or above
    /// `y_c - eps` are flagged censored and recorded at `y_c`. Returns the
    /// sample and the indices of the retained raw observations.
    pub fn from_top_coded(
        raw: &[f64],
        weights: Option<&[f64]>,
        y_c: f64,
        threshold: Threshold,
        eps: f64,
    ) -> Result<(Self, Vec<usize>)> {
        if let Some(w) = weights {
            if w.len() != raw.len() {
                return Err(TailError::Dimension { expected: raw.len(), got: w.len() });
            }
        }
        if !(y_c > 0.0) {
            return Err(TailError::InvalidSample(format!("top-code must be positive, got {y_c}")));
        }
        let w: Vec<f64> = raw.iter().map(|&y| if y >= y_c - eps { y_c } else { y }).collect();
        let sel = threshold::apply(&w, threshold)?;
        let values: Vec<f64> = sel.retained.iter().map(|&i| w[i]).collect();
        let censored: Vec<bool> = values.iter().map(|&v| v == y_c).collect();
        let mut sample = Self::new(values, censored, sel.y0, y_c)?;
        if let Some(wt) = weights {
            sample = sample.with_weights(sel.retained.iter().map(|&i| wt[i]).collect())?;
        }
        Ok((sample, sel.retained))
    }

    /// Tail sample treating every value as exact (top-code at infinity).
    pub fn exact(raw: &[f64], weights: Option<&[f64]>, threshold: Threshold) -> Result<(Self, Vec<usize>)> {
        Self::from_top_coded(raw, weights, f64::INFINITY, threshold, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn censored(&self) -> &[bool] {
        &self.censored
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn y_c(&self) -> f64 {
        self.y_c
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of uncensored observations (unweighted).
    pub fn uncensored_count(&self) -> usize {
        self.censored.iter().filter(|c| !**c).count()
    }

    pub fn censored_count(&self) -> usize {
        self.len() - self.uncensored_count()
    }

    /// Weighted `n0`.
    pub fn n0(&self) -> f64 {
        (0..self.len()).filter(|&i| !self.censored[i]).map(|i| self.weight(i)).sum()
    }

    /// Weighted `nc`.
    pub fn nc(&self) -> f64 {
        (0..self.len()).filter(|&i| self.censored[i]).map(|i| self.weight(i)).sum()
    }

    /// `log(w_i / y0)` for each observation.
    pub fn log_excess(&self) -> Vec<f64> {
        self.values.iter().map(|&w| (w / self.y0).ln()).collect()
    }

    /// Same sample with every outcome, `y0` and `y_c` multiplied by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("scale factor must be positive, got {lambda}"));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v * lambda).collect(),
            censored: self.censored.clone(),
            y0: self.y0 * lambda,
            y_c: self.y_c * lambda,
            weights: self.weights.clone(),
        })
    }

    /// Drops the censoring information: censored values become exact
    /// observations at `y_c`.
    pub fn ignoring_censoring(&self) -> Self {
        Self {
            values: self.values.clone(),
            censored: vec![false; self.len()],
            y0: self.y0,
            y_c: f64::INFINITY,
            weights: self.weights.clone(),
        }
    }
}

/// Order statistics used by the Hill estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HillCut {
    /// The `m` largest values, with `y0` the `(m+1)`-th largest.
    Count(usize),
    /// Every supplied value, with an explicit `y0` no larger than any of them.
    Level(f64),
}

/// Hill's estimator `[mean(log y_(j)) - log y0]^(-1)`.
pub fn hill_estimate(values: &[f64], cut: HillCut) -> Result<f64> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return domain(format!("Hill estimator needs positive finite values, got {v}"));
    }
    let (sum, m) = match cut {
        HillCut::Count(m) => {
            if m == 0 || m >= values.len() {
                return domain(format!("Hill count m = {m} must satisfy 1 <= m < n = {}", values.len()));
            }
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let y0 = sorted[m];
            (sorted[..m].iter().map(|v| (v / y0).ln()).sum::<f64>(), m)
        }
        HillCut::Level(y0) => {
            if !(y0 > 0.0) {
                return domain(format!("Hill threshold must be positive, got {y0}"));
            }
            if values.is_empty() {
                return domain("Hill estimator needs at least one value");
            }
            if let Some(v) = values.iter().find(|v| **v < y0) {
                return domain(format!("value {v} lies below the threshold {y0}"));
            }
            (values.iter().map(|v| (v / y0).ln()).sum::<f64>(), values.len())
        }
    };
    if sum <= 0.0 {
        return Err(TailError::Undefined("all selected values equal the threshold".into()));
    }
    Ok(m as f64 / sum)
}

/// Weighted Hill estimate on a tail sample, treating every value as exact.
pub fn hill_on_sample(sample: &CensoredSample) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, l) in sample.log_excess().into_iter().enumerate() {
        let wt = sample.weight(i);
        num += wt;
        den += wt * l;
    }
    if den <= 0.0 {
        return Err(TailError::Undefined("all selected values equal the threshold".into()));
    }
    Ok(num / den)
}

/// Censored Hill estimate
/// `n0 / [sum_unc log w_i + nc log y_c - (n0 + nc) log y0]`.
pub fn censored_hill_estimate(sample: &CensoredSample) -> Result<f64> {
    let n0 = sample.n0();
    if n0 <= 0.0 {
        return Err(TailError::Undefined("no uncensored observations in the tail".into()));
    }
    let den: f64 = sample
        .log_excess()
        .into_iter()
        .enumerate()
        .map(|(i, l)| sample.weight(i) * l)
        .sum();
    if den <= 0.0 {
        return Err(TailError::Undefined("tail log-excess sums to zero".into()));
    }
    Ok(n0 / den)
}

/// Log-likelihood of the censored Pareto model at shape `alpha`.
pub fn censored_pareto_loglik(sample: &CensoredSample, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("shape must be positive, got {alpha}"));
    }
    let (ly0, lyc) = (sample.y0().ln(), sample.y_c().ln());
    let mut total = 0.0;
    for (i, (&w, &c)) in sample.values().iter().zip(sample.censored()).enumerate() {
        let term = if c {
            alpha * (ly0 - lyc)
        } else {
            alpha.ln() + alpha * ly0 - (alpha + 1.0) * w.ln()
        };
        total += sample.weight(i) * term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn hill_examples() {
        assert_relative_eq!(hill_estimate(&[E * 3.0], HillCut::Level(3.0)).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            hill_estimate(&[2.0, 4.0, 8.0], HillCut::Level(1.0)).unwrap(),
            1.0 / (2.0 * LN_2),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            hill_estimate(&[2.5 * 3.0, 2.5 * 3.0], HillCut::Level(2.5)).unwrap(),
            1.0 / 3f64.ln(),
            max_relative = 1e-14
        );
        // count form: y0 is the (m+1)-th largest
        assert_relative_eq!(
            hill_estimate(&[8.0, 1.0, 4.0, 2.0, 0.5], HillCut::Count(3)).unwrap(),
            1.0 / (2.0 * LN_2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn hill_errors() {
        assert!(matches!(hill_estimate(&[2.0, 2.0], HillCut::Level(2.0)), Err(TailError::Undefined(_))));
        assert!(matches!(hill_estimate(&[-1.0, 2.0], HillCut::Level(1.0)), Err(TailError::Domain(_))));
        assert!(hill_estimate(&[1.0, 2.0], HillCut::Count(2)).is_err());
    }

    fn sample(vals: &[(f64, bool)], y0: f64, y_c: f64) -> CensoredSample {
        CensoredSample::new(vals.iter().map(|v| v.0).collect(), vals.iter().map(|v| v.1).collect(), y0, y_c).unwrap()
    }

    #[test]
    fn censored_hill_examples() {
        let s = sample(&[(2.0, false), (4.0, true)], 1.0, 4.0);
        assert_relative_eq!(censored_hill_estimate(&s).unwrap(), 1.0 / (3.0 * LN_2), max_relative = 1e-14);
        for k in 0..5 {
            let mut v = vec![(E, false)];
            v.extend(std::iter::repeat_n((E + 1.0, true), k));
            // top-code slightly above e so that the uncensored e sits below it
            let s = sample(&v, 1.0, E + 1.0);
            let expected = 1.0 / (1.0 + k as f64 * (E + 1.0).ln());
            assert_relative_eq!(censored_hill_estimate(&s).unwrap(), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn censored_hill_reduces_to_hill() {
        let vals = [1.3, 2.2, 5.0, 1.01, 9.7];
        let s = sample(&vals.map(|v| (v, false)), 1.0, 100.0);
        assert_relative_eq!(
            censored_hill_estimate(&s).unwrap(),
            hill_estimate(&vals, HillCut::Level(1.0)).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn all_censored_is_undefined() {
        let s = sample(&[(4.0, true), (4.0, true)], 1.0, 4.0);
        assert!(matches!(censored_hill_estimate(&s), Err(TailError::Undefined(_))));
    }

    #[test]
    fn loglik_value_and_foc() {
        let s = sample(&[(E, false)], 1.0, 10.0);
        assert_relative_eq!(censored_pareto_loglik(&s, 1.0).unwrap(), -2.0, max_relative = 1e-14);
        assert!(censored_pareto_loglik(&s, 0.0).is_err());

        let s = sample(&[(2.0, false), (1.5, false), (3.5, false), (4.0, true), (4.0, true)], 1.0, 4.0);
        let a = censored_hill_estimate(&s).unwrap();
        let h = 1e-5;
        let d = (censored_pareto_loglik(&s, a + h).unwrap() - censored_pareto_loglik(&s, a - h).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-8, "derivative {d}");
        // Closed-form derivative n0 / a - sum log(w / y0) vanishes exactly.
        let closed = s.n0() / a - s.log_excess().iter().sum::<f64>();
        assert!(closed.abs() < 1e-10);
        for i in 1..50 {
            let x = i as f64 * 0.1;
            let second = censored_pareto_loglik(&s, x + 0.05).unwrap() - 2.0 * censored_pareto_loglik(&s, x).unwrap()
                + censored_pareto_loglik(&s, x - 0.05).unwrap();
            assert!(second < 0.0);
        }
    }

    #[test]
    fn sample_invariants() {
        assert!(CensoredSample::new(vec![2.0], vec![true], 1.0, 4.0).is_err());
        assert!(CensoredSample::new(vec![4.0], vec![false], 1.0, 4.0).is_err());
        assert!(CensoredSample::new(vec![0.5], vec![false], 1.0, 4.0).is_err());
        assert!(CensoredSample::new(vec![2.0], vec![false], 4.0, 4.0).is_err());
        let s = CensoredSample::new(vec![2.0, 4.0], vec![false, true], 1.0, 4.0).unwrap();
        assert!(s.clone().with_weights(vec![1.0, -1.0]).is_err());
        let s = s.with_weights(vec![2.0, 0.5]).unwrap();
        assert_eq!((s.n0(), s.nc()), (2.0, 0.5));
    }

    #[test]
    fn from_top_coded_flags() {
        let raw = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let (s, idx) = CensoredSample::from_top_coded(&raw, None, 9.0, Threshold::Fraction(0.5), 0.0).unwrap();
        assert_eq!(s.y0(), 5.0);
        assert_eq!(idx, vec![5, 6, 7, 8, 9]);
        assert_eq!(s.values(), &[6.0, 7.0, 8.0, 9.0, 9.0]);
        assert_eq!(s.censored_count(), 2);
        let (s, _) = CensoredSample::from_top_coded(&raw, None, 9.0, Threshold::Fraction(0.5), 1.5).unwrap();
        assert_eq!(s.censored_count(), 3);
    }
}
