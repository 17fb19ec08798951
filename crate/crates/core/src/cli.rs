//! Command-line front end: `fit`, `effects`, `impute` and `simulate`.
//!
//! Every command stages its output files in memory and writes them together
//! at the end, so a failed run leaves the output directory untouched.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::RngSeed;
use crate::effects::{average_tail_index, effects_table, DEFAULT_DELTA_X, DEFAULT_U};
use crate::error::{Result, TailError};
use crate::imputation::{adjustment_factor_series, impute_top_coded, Branch, FactorPoint, PeriodFit, Subgroup, DEFAULT_SWITCH};
use crate::io::{load_dataset, sig6, stars, to_csv, CovariateSpec, DatasetSpec, OutputSet, PerPeriod, PeriodData};
use crate::monte_carlo::{
    ratio_rows, run_case, run_imputation_experiment, summarize, bias_table_to_csv, ImputationConfig, ImputationPoint, ImputationReport,
    McCase, McReport,
};
use crate::regression::{fit_censored, FitOptions, TailRegressionFit};
use crate::threshold::Threshold;

#[derive(Debug, Parser)]
#[command(name = "toptail", version, about = "Tail-index regression for top-coded data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the censored tail-index regression per period.
    Fit(FitArgs),
    /// Partial effects on exceedance probabilities.
    Effects(EffectsArgs),
    /// Impute top-coded outcomes and adjustment factors.
    Impute(ImputeArgs),
    /// Run the Monte Carlo studies.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Top-code, either one value or `period=value` pairs.
    #[arg(long)]
    pub topcode: String,
    /// Tail fraction, one value or `period=value` pairs.
    #[arg(long, conflicts_with = "y0", required_unless_present = "y0")]
    pub k: Option<String>,
    /// Explicit threshold, one value or `period=value` pairs.
    #[arg(long)]
    pub y0: Option<String>,
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub period: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub continuous: Vec<String>,
    /// `column:reference`, repeatable.
    #[arg(long)]
    pub categorical: Vec<String>,
    /// `col1,col2,col3:reference`, repeatable.
    #[arg(long)]
    pub dummy_set: Vec<String>,
    /// Outcomes within this distance below the top-code count as top-coded.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EffectsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_U)]
    pub u: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA_X)]
    pub delta_x: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Index at or below which the conditional median is used.
    #[arg(long, default_value_t = DEFAULT_SWITCH)]
    pub switch: f64,
    /// Subgroup as `col=value,col=value`, repeatable; `all` is always added.
    #[arg(long)]
    pub group: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// TOML file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reference case number, repeatable.
    #[arg(long)]
    pub case: Vec<u8>,
    /// Sample size, repeatable.
    #[arg(long)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1000 replications unless `--reps` is given.
    #[arg(long)]
    pub quick: bool,
    /// Also run the imputation experiment.
    #[arg(long)]
    pub imputation: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const QUICK_REPLICATIONS: usize = 1_000;
pub const DEFAULT_SEED: u64 = 2020;

/// Simulation settings read from TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    /// Reference cases, each run at every size in `n`.
    pub cases: Vec<u8>,
    pub n: Vec<usize>,
    /// Fully specified cases, run as given.
    pub custom: Vec<McCase>,
    pub imputation: Option<ImputationConfig>,
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| TailError::Config(format!("simulation config: {e}")))
    }

    /// Expands the reference cases and applies the replication and seed
    /// settings to every case.
    pub fn cases(&self) -> Result<Vec<McCase>> {
        let reps = self.replications.unwrap_or(DEFAULT_REPLICATIONS);
        let seed = RngSeed(self.seed.unwrap_or(DEFAULT_SEED));
        let sizes = if self.n.is_empty() { vec![5000] } else { self.n.clone() };
        let mut out = Vec::new();
        for &c in &self.cases {
            for &n in &sizes {
                out.push(McCase::reference(c, n, reps, seed)?);
            }
        }
        out.extend(self.custom.iter().cloned());
        if out.is_empty() && self.imputation.is_none() {
            return Err(TailError::Config("no simulation cases requested".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub reports: Vec<McReport>,
    pub imputation: Option<ImputationReport>,
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    let reports = cfg.cases()?.iter().map(run_case).collect::<Result<Vec<_>>>()?;
    let imputation = cfg.imputation.as_ref().map(run_imputation_experiment).transpose()?;
    Ok(SimulationOutput { reports, imputation })
}

fn split_reference(text: &str, what: &str) -> Result<(String, String)> {
    text.rsplit_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| TailError::Config(format!("{what} must look like '...:reference', got '{text}'")))
}

impl DataArgs {
    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let mut covariates: Vec<CovariateSpec> =
            self.continuous.iter().map(|c| CovariateSpec::Continuous { column: c.clone() }).collect();
        for c in &self.categorical {
            let (column, reference) = split_reference(c, "--categorical")?;
            covariates.push(CovariateSpec::Categorical { column, reference });
        }
        for d in &self.dummy_set {
            let (cols, reference) = split_reference(d, "--dummy-set")?;
            let columns = cols.split(',').map(|s| s.trim().to_string()).collect();
            covariates.push(CovariateSpec::DummySet { columns, reference });
        }
        let threshold = match (&self.k, &self.y0) {
            (Some(k), _) => map_per_period(PerPeriod::parse(k)?, Threshold::Fraction),
            (None, Some(y0)) => map_per_period(PerPeriod::parse(y0)?, Threshold::Level),
            (None, None) => return Err(TailError::Config("either --k or --y0 is required".into())),
        };
        Ok(DatasetSpec {
            path: self.input.clone(),
            outcome: self.outcome.clone(),
            weights: self.weights.clone(),
            covariates,
            period: self.period.clone(),
            topcode: PerPeriod::parse(&self.topcode)?,
            threshold,
            epsilon: self.epsilon,
        })
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions { tolerance: self.tolerance, max_iter: self.max_iter, ..FitOptions::default() }
    }
}

fn map_per_period<T, U>(p: PerPeriod<T>, f: impl Fn(T) -> U) -> PerPeriod<U> {
    PerPeriod { default: p.default.map(&f), by_period: p.by_period.into_iter().map(|(k, v)| (k, f(v))).collect() }
}

/// Loads the data and fits every period concurrently.
pub fn fit_periods(data: &DataArgs) -> Result<Vec<(PeriodData, TailRegressionFit)>> {
    let periods = load_dataset(&data.dataset_spec()?)?;
    let opts = data.fit_options();
    periods
        .into_par_iter()
        .map(|p| {
            let fit = fit_censored(&p.sample, &p.design, &opts)
                .map_err(|e| TailError::Data(format!("period '{}': {e}", p.period)))?;
            if !fit.converged {
                return Err(TailError::Data(format!(
                    "period '{}': no convergence after {} iterations",
                    p.period, fit.iterations
                )));
            }
            Ok((p, fit))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFitReport {
    pub period: String,
    pub rows: usize,
    pub tail_rows: usize,
    pub topcoded_rows: usize,
    pub y0: f64,
    pub y_c: f64,
    pub mean_alpha: f64,
    pub iterations: usize,
    pub coefficients: IndexMap<String, CoefficientSummary>,
    pub covariance: Vec<Vec<f64>>,
}

/// Long-format coefficient table, one row per period and coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub period: String,
    pub coefficient: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub stars: String,
}

pub fn fit_report(data: &PeriodData, fit: &TailRegressionFit) -> PeriodFitReport {
    let coefficients = fit
        .column_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            (
                name.clone(),
                CoefficientSummary {
                    estimate: fit.theta[j],
                    std_error: fit.std_errors[j],
                    t_stat: fit.t_stats[j],
                    stars: stars(fit.t_stats[j]).into(),
                },
            )
        })
        .collect();
    PeriodFitReport {
        period: data.period.clone(),
        rows: data.period_rows,
        tail_rows: data.sample.len(),
        topcoded_rows: fit.nc,
        y0: fit.y0,
        y_c: data.sample.y_c(),
        mean_alpha: average_tail_index(fit, true),
        iterations: fit.iterations,
        coefficients,
        covariance: fit.covariance.clone(),
    }
}

pub fn coefficient_rows(reports: &[PeriodFitReport]) -> Vec<CoefficientRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.coefficients.iter().map(|(name, c)| CoefficientRow {
                period: r.period.clone(),
                coefficient: name.clone(),
                estimate: sig6(c.estimate),
                std_error: sig6(c.std_error),
                t_stat: sig6(c.t_stat),
                stars: c.stars.clone(),
            })
        })
        .collect()
}

pub fn cmd_fit(args: &FitArgs) -> Result<Vec<PathBuf>> {
    let fits = fit_periods(&args.data)?;
    let reports: Vec<PeriodFitReport> = fits.iter().map(|(d, f)| fit_report(d, f)).collect();
    let dir = &args.data.out_dir;
    let mut out = OutputSet::new();
    out.add(dir.join("fit.json"), serde_json::to_vec_pretty(&reports)?);
    out.add(dir.join("coefficients.csv"), to_csv(&coefficient_rows(&reports))?);
    out.commit()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub period: String,
    pub covariate: String,
    pub u: f64,
    pub delta_x: f64,
    pub delta_pct: f64,
}

pub fn effect_rows(fits: &[(PeriodData, TailRegressionFit)], u: f64, delta_x: f64) -> Result<Vec<EffectRow>> {
    let mut rows = Vec::new();
    for (data, fit) in fits {
        for e in effects_table(fit, &data.dummy_columns, u, delta_x)? {
            rows.push(EffectRow {
                period: data.period.clone(),
                covariate: e.covariate,
                u: e.u,
                delta_x: e.delta_x,
                delta_pct: e.delta_pct,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_effects(args: &EffectsArgs) -> Result<Vec<PathBuf>> {
    let fits = fit_periods(&args.data)?;
    let rows = effect_rows(&fits, args.u, args.delta_x)?;
    let rounded: Vec<EffectRow> = rows.iter().cloned().map(|r| EffectRow { delta_pct: sig6(r.delta_pct), ..r }).collect();
    let dir = &args.data.out_dir;
    let mut out = OutputSet::new();
    out.add(dir.join("effects.json"), serde_json::to_vec_pretty(&rows)?);
    out.add(dir.join("effects.csv"), to_csv(&rounded)?);
    out.commit()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationRow {
    pub period: String,
    /// Zero-based data-row number in the input file.
    pub source_row: usize,
    pub imputed: f64,
    pub factor: f64,
    pub branch: Branch,
}

pub fn parse_subgroup(text: &str) -> Result<Subgroup> {
    if text.trim() == "all" {
        return Ok(Subgroup::all());
    }
    let conditions = text
        .split(',')
        .map(|c| {
            let (col, v) = c
                .split_once('=')
                .ok_or_else(|| TailError::Config(format!("group condition must be 'column=value', got '{c}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| TailError::Config(format!("group value not numeric: '{v}'")))?;
            Ok((col.trim().to_string(), v))
        })
        .collect::<Result<_>>()?;
    Ok(Subgroup { conditions })
}

pub fn cmd_impute(args: &ImputeArgs) -> Result<Vec<PathBuf>> {
    let fits = fit_periods(&args.data)?;
    let mut imputations = Vec::new();
    for (data, fit) in &fits {
        let res = impute_top_coded(fit, &data.design, &Subgroup::all(), args.switch)
            .map_err(|e| TailError::Data(format!("period '{}': {e}", data.period)))?;
        imputations.extend(res.values.iter().map(|v| ImputationRow {
            period: data.period.clone(),
            source_row: data.source_rows[v.row],
            imputed: v.imputed,
            factor: v.factor,
            branch: v.branch,
        }));
    }
    let mut groups = vec![Subgroup::all()];
    for g in &args.group {
        groups.push(parse_subgroup(g)?);
    }
    let periods: Vec<PeriodFit> =
        fits.iter().map(|(d, f)| PeriodFit { period: d.period.clone(), fit: f, design: &d.design }).collect();
    let mut factors: Vec<FactorPoint> = Vec::new();
    for g in &groups {
        factors.extend(adjustment_factor_series(&periods, g, args.switch)?);
    }
    let dir = &args.data.out_dir;
    let mut out = OutputSet::new();
    out.add(dir.join("imputations.csv"), to_csv(&imputations)?);
    out.add(dir.join("factors.csv"), to_csv(&factors)?);
    out.commit()
}

pub fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    let mut cfg = match &args.config {
        Some(path) => SimulationConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => SimulationConfig::default(),
    };
    if !args.case.is_empty() {
        cfg.cases = args.case.clone();
    }
    if !args.n.is_empty() {
        cfg.n = args.n.clone();
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.reps.is_some() {
        cfg.replications = args.reps;
    } else if args.quick {
        cfg.replications = Some(QUICK_REPLICATIONS);
    }
    if cfg.cases.is_empty() && cfg.custom.is_empty() && !args.imputation && cfg.imputation.is_none() {
        cfg.cases = (1..=6).collect();
    }
    if args.imputation && cfg.imputation.is_none() {
        cfg.imputation = Some(ImputationConfig::default());
    }
    if let Some(imp) = cfg.imputation.as_mut() {
        if let Some(seed) = args.seed {
            imp.seed = RngSeed(seed);
        }
        if let Some(r) = args.reps.or(args.quick.then_some(QUICK_REPLICATIONS)) {
            imp.replications = r;
        }
    }
    Ok(cfg)
}

pub fn simulation_outputs(result: &SimulationOutput, dir: &Path) -> Result<OutputSet> {
    let mut out = OutputSet::new();
    if !result.reports.is_empty() {
        out.add(dir.join("bias_table.csv"), bias_table_to_csv(&summarize(&result.reports))?);
        out.add(dir.join("ratios.csv"), to_csv(&ratio_rows(&result.reports))?);
        out.add(dir.join("reports.json"), serde_json::to_vec_pretty(&result.reports)?);
    }
    if let Some(imp) = &result.imputation {
        let rounded: Vec<ImputationPoint> = imp
            .points
            .iter()
            .map(|p| ImputationPoint {
                mse_tau1: sig6(p.mse_tau1),
                mse_tau2: sig6(p.mse_tau2),
                mse_tau3: sig6(p.mse_tau3),
                ratio1: sig6(p.ratio1),
                ratio2: sig6(p.ratio2),
                ..p.clone()
            })
            .collect();
        out.add(dir.join("imputation.csv"), to_csv(&rounded)?);
        out.add(dir.join("imputation.json"), serde_json::to_vec_pretty(imp)?);
    }
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let cfg = simulation_config(args)?;
    let result = run_simulation(&cfg)?;
    simulation_outputs(&result, &args.out_dir)?.commit()
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Effects(a) => cmd_effects(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Error shape written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub error: &'a str,
    pub message: String,
}

impl<'a> From<&'a TailError> for ErrorReport<'a> {
    fn from(e: &'a TailError) -> Self {
        Self { error: e.kind(), message: e.to_string() }
    }
}
