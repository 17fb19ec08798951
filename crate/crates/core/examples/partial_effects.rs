//! Percentage changes in the probability of exceeding an extreme conditional
//! quantile, for a continuous covariate and a dummy.
use rand::Rng;
use toptail::classical::CensoredSample;
use toptail::design::DesignMatrix;
use toptail::distributions::{ParetoLaw, RngSeed};
use toptail::effects::{effects_table, partial_effect_continuous, unconditional_quantile_order, DEFAULT_U};
use toptail::regression::{fit_censored, FitOptions};
use toptail::threshold::Threshold;

fn main() -> toptail::error::Result<()> {
    // Higher schooling thickens the tail (negative coefficient), a dummy thins it.
    let (b0, b_school, b_dummy) = (1.2, -0.08, 0.3);
    let n = 30_000;
    let mut rng = RngSeed(5).rng();
    let (mut school, mut dummy, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let s = f64::from(rng.random_range(8..=20u8));
        let d = f64::from(u8::from(rng.random_bool(0.4)));
        let law = ParetoLaw::new(1.0, (b0 + b_school * s + b_dummy * d).exp())?;
        y.push(law.quantile(rng.random())?);
        school.push(s);
        dummy.push(d);
    }
    let (sample, kept) = CensoredSample::from_top_coded(&y, None, 6.0, Threshold::Fraction(0.2), 0.0)?;
    let pick = |v: &[f64]| kept.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let design = DesignMatrix::with_intercept(&[("schooling", &pick(&school)), ("female", &pick(&dummy))])?;
    let fit = fit_censored(&sample, &design, &FitOptions::default())?;

    println!("u = {DEFAULT_U}: the conditional quantile sits at order {:.3} overall", unconditional_quantile_order(DEFAULT_U, 0.2)?);
    for e in effects_table(&fit, &["female".to_string()], DEFAULT_U, 1.0)? {
        println!("{:<10} dx={} -> {:+.3}%", e.covariate, e.delta_x, e.delta_pct);
    }
    let four_years = partial_effect_continuous(fit.theta[1], DEFAULT_U, 4.0)?;
    println!("four more years of schooling: {four_years:+.3}%");
    Ok(())
}
