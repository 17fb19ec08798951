//! Tail threshold selection from the `floor(k n)` largest observations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// How the tail cut-off `y0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Keep the `floor(k n)` largest observations.
    Fraction(f64),
    /// Explicit cut-off; observations strictly above it are kept.
    Level(f64),
}

/// Outcome of a threshold selection. `retained` holds indices into the
/// input, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSelection {
    pub y0: f64,
    pub retained: Vec<usize>,
}

/// `floor(k n)`, tolerant to representation error such as `0.2 * 5000`.
pub fn tail_count(k: f64, n: usize) -> usize {
    let raw = k * n as f64;
    (raw + 1e-9 * raw.max(1.0)).floor() as usize
}

/// Picks `y0` as the `(n - floor(k n))`-th order statistic and retains the
/// `floor(k n)` largest values. Ties straddling `y0` are broken by original
/// index, lowest index first.
pub fn select_threshold(values: &[f64], k: f64) -> Result<TailSelection> {
    if !(k > 0.0 && k < 1.0) {
        return Err(TailError::Config(format!("tail fraction must lie in (0, 1), got {k}")));
    }
    let n = values.len();
    let m = tail_count(k, n);
    if m == 0 {
        return Err(TailError::Config(format!("floor(k n) = 0 for k = {k}, n = {n}")));
    }
    if m >= n {
        return Err(TailError::Config(format!("floor(k n) = {m} leaves no threshold observation (n = {n})")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(TailError::Data(format!("non-finite observation {bad}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let y0 = values[order[m]];
    let mut retained = order[..m].to_vec();
    if retained.iter().all(|&i| values[i] == y0) {
        return Err(TailError::InvalidSample(format!(
            "degenerate tail: all {m} retained observations equal the threshold {y0}"
        )));
    }
    retained.sort_unstable();
    Ok(TailSelection { y0, retained })
}

/// Retains all observations strictly above an explicit `y0`.
pub fn select_above(values: &[f64], y0: f64) -> Result<TailSelection> {
    if !(y0.is_finite()) {
        return Err(TailError::Config(format!("threshold must be finite, got {y0}")));
    }
    let retained: Vec<usize> = (0..values.len()).filter(|&i| values[i] > y0).collect();
    if retained.is_empty() {
        return Err(TailError::InvalidSample(format!("no observations above threshold {y0}")));
    }
    Ok(TailSelection { y0, retained })
}

pub fn apply(values: &[f64], threshold: Threshold) -> Result<TailSelection> {
    match threshold {
        Threshold::Fraction(k) => select_threshold(values, k),
        Threshold::Level(y0) => select_above(values, y0),
    }
}

/// Empirical `q`-quantile under the same order-statistic convention: the
/// `(n - floor((1 - q) n))`-th smallest value, so exactly `floor((1-q) n)`
/// values lie above it when values are distinct.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(TailError::Config(format!("quantile order must lie in (0, 1), got {q}")));
    }
    if values.is_empty() {
        return Err(TailError::Data("empirical quantile of an empty sample".into()));
    }
    let n = values.len();
    let above = tail_count(1.0 - q, n).min(n - 1);
    let mut sorted = values.to_vec();
    let pos = n - above - 1;
    let (_, nth, _) = sorted.select_nth_unstable_by(pos, |a, b| a.total_cmp(b));
    Ok(*nth)
}
