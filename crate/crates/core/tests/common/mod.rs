#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use toptail::classical::CensoredSample;
use toptail::design::DesignMatrix;
use toptail::distributions::{ParetoLaw, RngSeed};

pub const FIXTURE_THETA: [f64; 3] = [1.0, 0.5, -0.3];
pub const FIXTURE_TOPCODE: f64 = 3.5;

/// Pareto outcomes with index exp(1 + 0.5 x - 0.3 female) for x ~ U(0, 2),
/// top-coded at 3.5, with a year column and a three-level sector column
/// whose levels have no effect.
pub fn write_fixture(path: &Path, n: usize, seed: u64) {
    let mut rng = RngSeed(seed).rng();
    let mut text = String::from("year,y,x,female,sector,wt\n");
    for i in 0..n {
        let x: f64 = 2.0 * rng.random::<f64>();
        let female = u8::from(rng.random_bool(0.5));
        let sector = ["a", "b", "c"][rng.random_range(0..3)];
        let a = (FIXTURE_THETA[0] + FIXTURE_THETA[1] * x + FIXTURE_THETA[2] * f64::from(female)).exp();
        let y = ParetoLaw::new(1.0, a).unwrap().quantile(rng.random()).unwrap().min(FIXTURE_TOPCODE);
        let year = if i % 2 == 0 { 2001 } else { 2002 };
        writeln!(text, "{year},{y},{x},{female},{sector},1").unwrap();
    }
    std::fs::write(path, text).unwrap();
}

/// A random censored sample with a two-covariate design.
pub fn random_instance(seed: u64, n: usize) -> (CensoredSample, DesignMatrix) {
    let mut rng = RngSeed(seed).rng();
    let y0 = rng.random_range(0.5..2.0);
    let y_c = y0 * rng.random_range(1.5..6.0);
    let (mut vals, mut cens, mut x1, mut x2, mut wts) = (vec![], vec![], vec![], vec![], vec![]);
    for _ in 0..n {
        let a: f64 = rng.random_range(0.5..4.0);
        let y = y0 * (1.0 - rng.random::<f64>()).powf(-1.0 / a);
        if y >= y_c {
            vals.push(y_c);
            cens.push(true);
        } else {
            vals.push(y);
            cens.push(false);
        }
        x1.push(rng.random_range(-1.0..1.0));
        x2.push(f64::from(u8::from(rng.random_bool(0.3))));
        wts.push(rng.random_range(0.2..3.0));
    }
    let sample = CensoredSample::new(vals, cens, y0, y_c).unwrap().with_weights(wts).unwrap();
    let design = DesignMatrix::with_intercept(&[("x1", &x1), ("x2", &x2)]).unwrap();
    (sample, design)
}
