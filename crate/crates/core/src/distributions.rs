//! Pareto and Burr kernels with inverse-CDF samplers.
//!
//! The Pareto law is parameterised by its scale `y0` and shape `alpha`, with
//! survival `(y0 / y)^alpha` on `[y0, inf)`. The Burr law uses
//! `F(x) = 1 - (1 + x^(-alpha*rho))^(1/rho)` with `rho < 0`; its upper tail
//! behaves like a Pareto tail with the same `alpha`.
//!
//! Both laws are evaluated in log space so that `rho = -2` with `u` close to
//! one does not overflow.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TailError};

/// Identifier of the uniform generator, recorded in simulation metadata.
pub const GENERATOR_ID: &str = "ChaCha8Rng (rand_chacha 0.9), one stream per replication";

/// Seed for reproducible sampling. Replications draw from independent
/// ChaCha streams derived from the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent substream `index` of this seed.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

/// A law that can be sampled by inverting its CDF.
pub trait InverseCdf {
    /// Quantile for `u` in the open unit interval; callers guarantee the range.
    fn quantile_open(&self, u: f64) -> f64;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_open(u)
    }

    fn sample(&self, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
        if n == 0 {
            return domain("sample size must be at least 1");
        }
        let mut rng = seed.rng();
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoLaw {
    y0: f64,
    alpha: f64,
}

impl ParetoLaw {
    pub fn new(y0: f64, alpha: f64) -> Result<Self> {
        if !(y0 > 0.0 && y0.is_finite()) {
            return domain(format!("Pareto scale must be positive and finite, got {y0}"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("Pareto shape must be positive and finite, got {alpha}"));
        }
        Ok(Self { y0, alpha })
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `P(Y > y) = (y0 / y)^alpha` for `y >= y0`.
    pub fn survival(&self, y: f64) -> Result<f64> {
        if !(y >= self.y0) {
            return domain(format!("y = {y} lies below the Pareto scale {}", self.y0));
        }
        Ok((self.alpha * (self.y0 / y).ln()).exp())
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        if !(y >= self.y0) {
            return domain(format!("y = {y} lies below the Pareto scale {}", self.y0));
        }
        Ok(-(self.alpha * (self.y0 / y).ln()).exp_m1())
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        if !(y >= self.y0) {
            return domain(format!("y = {y} lies below the Pareto scale {}", self.y0));
        }
        Ok(self.alpha / y * (self.alpha * (self.y0 / y).ln()).exp())
    }

    /// Inverse CDF, `y0 * (1 - u)^(-1/alpha)` for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return domain(format!("Pareto quantile requires 0 <= u < 1, got {u}"));
        }
        Ok(self.quantile_open(u))
    }

    /// Mean `alpha * y0 / (alpha - 1)`; infinite when `alpha <= 1`.
    pub fn mean(&self) -> f64 {
        if self.alpha <= 1.0 {
            f64::INFINITY
        } else {
            self.alpha / (self.alpha - 1.0) * self.y0
        }
    }
}

impl InverseCdf for ParetoLaw {
    fn quantile_open(&self, u: f64) -> f64 {
        self.y0 * (-(-u).ln_1p() / self.alpha).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurrLaw {
    alpha: f64,
    rho: f64,
}

impl BurrLaw {
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("Burr shape must be positive and finite, got {alpha}"));
        }
        if !(rho < 0.0 && rho.is_finite()) {
            return domain(format!("Burr second-order parameter must be negative, got {rho}"));
        }
        Ok(Self { alpha, rho })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    // log(1 + x^(-alpha*rho))
    fn log_bracket(&self, x: f64) -> f64 {
        softplus(-self.alpha * self.rho * x.ln())
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("Burr support is x > 0, got {x}"));
        }
        Ok((self.log_bracket(x) / self.rho).exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("Burr support is x > 0, got {x}"));
        }
        Ok(-(self.log_bracket(x) / self.rho).exp_m1())
    }

    /// `alpha * x^(-1-alpha*rho) * (1 + x^(-alpha*rho))^(1/rho - 1)`, the
    /// derivative of [`BurrLaw::cdf`].
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("Burr support is x > 0, got {x}"));
        }
        let (a, r) = (self.alpha, self.rho);
        let log_pdf = a.ln() + (-1.0 - a * r) * x.ln() + (1.0 / r - 1.0) * self.log_bracket(x);
        Ok(log_pdf.exp())
    }

    /// Inverse CDF, `((1 - u)^rho - 1)^(-1/(alpha*rho))` for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("Burr quantile requires 0 < u < 1, got {u}"));
        }
        Ok(self.quantile_open(u))
    }
}

impl InverseCdf for BurrLaw {
    fn quantile_open(&self, u: f64) -> f64 {
        let t = self.rho * (-u).ln_1p();
        (-ln_expm1(t) / (self.alpha * self.rho)).exp()
    }
}

pub fn pareto_survival(law: &ParetoLaw, y: f64) -> Result<f64> {
    law.survival(y)
}

pub fn pareto_quantile(law: &ParetoLaw, u: f64) -> Result<f64> {
    law.quantile(u)
}

pub fn pareto_sample(law: &ParetoLaw, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    law.sample(n, seed)
}

pub fn burr_cdf(law: &BurrLaw, x: f64) -> Result<f64> {
    law.cdf(x)
}

pub fn burr_quantile(law: &BurrLaw, u: f64) -> Result<f64> {
    law.quantile(u)
}

pub fn burr_sample(law: &BurrLaw, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    law.sample(n, seed)
}

/// Maps uniforms through a law's quantile; used to pin draws in tests and
/// by callers that manage their own uniform stream.
pub fn sample_from_uniforms<L: InverseCdf>(law: &L, uniforms: &[f64]) -> Result<Vec<f64>> {
    if uniforms.is_empty() {
        return domain("sample size must be at least 1");
    }
    uniforms
        .iter()
        .map(|&u| {
            if (0.0..1.0).contains(&u) {
                Ok(law.quantile_open(u))
            } else {
                Err(TailError::Domain(format!("uniform draw outside [0, 1): {u}")))
            }
        })
        .collect()
}

fn softplus(z: f64) -> f64 {
    if z > 35.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

// log(exp(t) - 1) for t > 0
fn ln_expm1(t: f64) -> f64 {
    if t > 35.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}
