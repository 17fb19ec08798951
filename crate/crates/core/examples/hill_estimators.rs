//! The Hill estimator on exact data against the censored Hill estimator on
//! the same draw after top-coding at the 95th percentile.
use toptail::classical::{censored_hill_estimate, hill_estimate, hill_on_sample, CensoredSample, HillCut};
use toptail::distributions::{InverseCdf, ParetoLaw, RngSeed};
use toptail::threshold::{empirical_quantile, Threshold};

fn main() -> toptail::error::Result<()> {
    let alpha = 2.5;
    let y = ParetoLaw::new(1.0, alpha)?.sample(20_000, RngSeed(11))?;
    let k = 0.2;
    let m = (k * y.len() as f64) as usize;
    println!("true alpha {alpha}");
    println!("hill, exact data, top {m}: {:.4}", hill_estimate(&y, HillCut::Count(m))?);

    let y_c = empirical_quantile(&y, 0.95)?;
    let (sample, _) = CensoredSample::from_top_coded(&y, None, y_c, Threshold::Fraction(k), 0.0)?;
    println!("top-code {y_c:.3}: {} of {} tail values censored", sample.censored_count(), sample.len());
    println!("hill ignoring the top-code: {:.4}", hill_on_sample(&sample)?);
    println!("censored hill:              {:.4}", censored_hill_estimate(&sample)?);
    Ok(())
}
