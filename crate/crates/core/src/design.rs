use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// Covariate rows aligned with a tail sample, stored row-major. When
/// `intercept` is set the first column is the constant one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    data: Vec<f64>,
    rows: usize,
    names: Vec<String>,
    intercept: bool,
}

impl DesignMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, names: Vec<String>, intercept: bool) -> Result<Self> {
        let p = names.len();
        if p == 0 {
            return Err(TailError::Config("design needs at least one column".into()));
        }
        let n = rows.len();
        let mut data = Vec::with_capacity(n * p);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(TailError::Dimension { expected: p, got: row.len() });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(TailError::Data(format!("non-finite covariate {v} in row {i}")));
            }
            data.extend(row);
        }
        if intercept && (0..n).any(|i| data[i * p] != 1.0) {
            return Err(TailError::Config("intercept flag set but first column is not constant one".into()));
        }
        Ok(Self { data, rows: n, names, intercept })
    }

    /// Intercept column followed by the given covariate columns.
    pub fn with_intercept(columns: &[(&str, &[f64])]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.1.len());
        let mut names = vec!["intercept".to_string()];
        names.extend(columns.iter().map(|c| c.0.to_string()));
        let rows = (0..n)
            .map(|i| {
                let mut r = Vec::with_capacity(columns.len() + 1);
                r.push(1.0);
                for (_, col) in columns {
                    r.push(col[i]);
                }
                r
            })
            .collect();
        if let Some(c) = columns.iter().find(|c| c.1.len() != n) {
            return Err(TailError::Dimension { expected: n, got: c.1.len() });
        }
        Self::from_rows(rows, names, true)
    }

    /// Intercept-only design with `n` rows.
    pub fn intercept_only(n: usize) -> Self {
        Self { data: vec![1.0; n], rows: n, names: vec!["intercept".into()], intercept: true }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.ncols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i)[j]).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let p = self.ncols();
        let mut data = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { data, rows: indices.len(), names: self.names.clone(), intercept: self.intercept }
    }

    /// `sum_i weight_i x_i / sum_i weight_i`.
    pub fn weighted_means(&self, weights: Option<&[f64]>) -> Vec<f64> {
        let p = self.ncols();
        let mut acc = vec![0.0; p];
        let mut total = 0.0;
        for i in 0..self.rows {
            let w = weights.map_or(1.0, |w| w[i]);
            total += w;
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += w * x;
            }
        }
        acc.into_iter().map(|a| a / total).collect()
    }

    #[inline]
    pub fn dot(&self, i: usize, theta: &[f64]) -> f64 {
        self.row(i).iter().zip(theta).map(|(x, t)| x * t).sum()
    }
}
