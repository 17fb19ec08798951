//! Imputing top-coded outcomes from a fitted tail regression, and the
//! adjustment-factor series over periods whose tail thickens.
use rand::Rng;
use toptail::classical::CensoredSample;
use toptail::design::DesignMatrix;
use toptail::distributions::{ParetoLaw, RngSeed};
use toptail::imputation::{adjustment_factor_series, impute_top_coded, PeriodFit, Subgroup, DEFAULT_SWITCH};
use toptail::regression::{fit_censored, FitOptions, TailRegressionFit};
use toptail::threshold::Threshold;

fn period(b0: f64, seed: u64) -> toptail::error::Result<(TailRegressionFit, DesignMatrix)> {
    let mut rng = RngSeed(seed).rng();
    let (mut g, mut y) = (Vec::new(), Vec::new());
    for _ in 0..20_000 {
        let d = f64::from(u8::from(rng.random_bool(0.5)));
        y.push(ParetoLaw::new(1.0, (b0 + 0.4 * d).exp())?.quantile(rng.random())?);
        g.push(d);
    }
    let (sample, kept) = CensoredSample::from_top_coded(&y, None, 4.0, Threshold::Fraction(0.2), 0.0)?;
    let design = DesignMatrix::with_intercept(&[("female", &kept.iter().map(|&i| g[i]).collect::<Vec<_>>())])?;
    Ok((fit_censored(&sample, &design, &FitOptions::default())?, design))
}

fn main() -> toptail::error::Result<()> {
    let years: Vec<(String, (TailRegressionFit, DesignMatrix))> = [(1.2, "1990"), (1.0, "2000"), (0.8, "2010")]
        .iter()
        .enumerate()
        .map(|(i, &(b0, yr))| Ok((yr.to_string(), period(b0, i as u64)?)))
        .collect::<toptail::error::Result<_>>()?;

    let (fit, design) = &years[0].1;
    let res = impute_top_coded(fit, design, &Subgroup::all(), DEFAULT_SWITCH)?;
    println!("{}: {} top-coded rows, mean imputed {:.3} (top-code {})", years[0].0, res.values.len(), res.mean_imputed(None), res.y_c);

    let periods: Vec<PeriodFit> =
        years.iter().map(|(p, (f, d))| PeriodFit { period: p.clone(), fit: f, design: d }).collect();
    for group in [Subgroup::all(), Subgroup { conditions: vec![("female".into(), 1.0)] }] {
        for pt in adjustment_factor_series(&periods, &group, DEFAULT_SWITCH)? {
            println!("{} {:<9} factor {:.4} over {} rows", pt.year, pt.group, pt.factor, pt.n_topcoded);
        }
    }
    Ok(())
}
