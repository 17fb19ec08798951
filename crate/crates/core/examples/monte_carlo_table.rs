//! A small run of the bias/RMSE study for two reference designs.
use toptail::distributions::RngSeed;
use toptail::monte_carlo::{run_case, summarize, McCase};

fn main() -> toptail::error::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mut reports = Vec::new();
    for case in [1, 4] {
        let report = run_case(&McCase::reference(case, 5000, reps, RngSeed(42))?)?;
        println!(
            "{}: ratio1 {:.3}, ratio2 {:.3}, {} failures, {:.1}s",
            report.case.label, report.ratio1, report.ratio2, report.failures, report.metadata.runtime_secs
        );
        reports.push(report);
    }
    println!("{:<8} {:>5} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9}", "case", "n", "hat b1", "rmse", "cens b1", "rmse", "tilde b1", "rmse");
    for r in summarize(&reports) {
        println!(
            "{:<8} {:>5} | {:>9.4} {:>9.4} | {:>9.4} {:>9.4} | {:>9.4} {:>9.4}",
            r.case, r.n, r.hat_bias_b1, r.hat_rmse_b1, r.cens_bias_b1, r.cens_rmse_b1, r.tilde_bias_b1, r.tilde_rmse_b1
        );
    }
    Ok(())
}
