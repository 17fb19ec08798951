//! End to end on a CSV file: write a synthetic two-year panel, load it with
//! per-year top-codes and a categorical covariate, fit, and stage reports.
use std::fmt::Write as _;

use rand::Rng;
use toptail::cli::{coefficient_rows, fit_periods, fit_report, DataArgs};
use toptail::distributions::{ParetoLaw, RngSeed};
use toptail::io::{to_csv, OutputSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("toptail-csv-workflow");
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("panel.csv");

    let mut rng = RngSeed(9).rng();
    let mut text = String::from("year,wage,wt,exper,region\n");
    for (year, y_c) in [("1995", 8.0), ("2005", 10.0)] {
        for _ in 0..10_000 {
            let exper = f64::from(rng.random_range(0..40u8));
            let region = ["north", "south", "west"][rng.random_range(0..3)];
            let shift = if region == "south" { 0.25 } else { 0.0 };
            let wage = ParetoLaw::new(1.0, (1.1 - 0.01 * exper + shift).exp())?.quantile(rng.random())?;
            let wt = rng.random_range(0.5..2.0);
            writeln!(text, "{year},{:.4},{wt:.3},{exper},{region}", wage.min(y_c))?;
        }
    }
    std::fs::write(&input, text)?;

    let args = DataArgs {
        input,
        outcome: "wage".into(),
        topcode: "1995=8,2005=10".into(),
        k: Some("0.2".into()),
        y0: None,
        weights: Some("wt".into()),
        period: Some("year".into()),
        continuous: vec!["exper".into()],
        categorical: vec!["region:north".into()],
        dummy_set: vec![],
        epsilon: 0.0,
        tolerance: 1e-8,
        max_iter: 200,
        out_dir: dir.join("out"),
    };
    let fits = fit_periods(&args)?;
    let reports: Vec<_> = fits.iter().map(|(d, f)| fit_report(d, f)).collect();
    for r in &reports {
        println!("{}: {} rows, {} in the tail, {} top-coded", r.period, r.rows, r.tail_rows, r.topcoded_rows);
    }
    let mut out = OutputSet::new();
    out.add(args.out_dir.join("coefficients.csv"), to_csv(&coefficient_rows(&reports))?);
    for path in out.commit()? {
        print!("{}:\n{}", path.display(), std::fs::read_to_string(&path)?);
    }
    Ok(())
}
