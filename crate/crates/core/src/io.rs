//! CSV ingestion of top-coded micro-data and atomic report output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::CensoredSample;
use crate::design::DesignMatrix;
use crate::error::{Result, TailError};
use crate::threshold::Threshold;

/// A value that may differ by period, with an optional fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPeriod<T> {
    pub default: Option<T>,
    pub by_period: BTreeMap<String, T>,
}

impl<T: Clone> PerPeriod<T> {
    pub fn constant(v: T) -> Self {
        Self { default: Some(v), by_period: BTreeMap::new() }
    }

    pub fn get(&self, period: &str) -> Option<T> {
        self.by_period.get(period).cloned().or_else(|| self.default.clone())
    }
}

impl PerPeriod<f64> {
    /// Parses `2884`, `1992=1923,1998=2884` or `2884,1992=1923`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self { default: None, by_period: BTreeMap::new() };
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| TailError::Config(format!("not a number: '{s}'")))
            };
            match part.split_once('=') {
                Some((p, v)) => {
                    out.by_period.insert(p.trim().to_string(), num(v)?);
                }
                None => out.default = Some(num(part)?),
            }
        }
        if out.default.is_none() && out.by_period.is_empty() {
            return Err(TailError::Config("empty value list".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateSpec {
    Continuous { column: String },
    /// Categorical column expanded to one dummy per non-reference level,
    /// named `<column>_<level>`.
    Categorical { column: String, reference: String },
    /// Pre-expanded 0/1 columns; the reference column is dropped.
    DummySet { columns: Vec<String>, reference: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub outcome: String,
    pub weights: Option<String>,
    pub covariates: Vec<CovariateSpec>,
    pub period: Option<String>,
    pub topcode: PerPeriod<f64>,
    pub threshold: PerPeriod<Threshold>,
    /// Outcomes at or above `topcode - epsilon` count as top-coded.
    #[serde(default)]
    pub epsilon: f64,
}

/// One period's estimation inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodData {
    pub period: String,
    pub sample: CensoredSample,
    /// Tail rows aligned with `sample`; first column is the intercept.
    pub design: DesignMatrix,
    /// Zero-based data-row numbers (header excluded) of the retained rows.
    pub source_rows: Vec<usize>,
    /// Rows of the period before the tail cut.
    pub period_rows: usize,
    /// Non-reference dummy columns, for partial-effect formulas.
    pub dummy_columns: Vec<String>,
}

const ALL_PERIODS: &str = "all";

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        TailError::Data(format!(
            "column '{name}' not found; available: {}",
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn parse_num(text: &str, col: &str, row: usize) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| TailError::Data(format!("row {}: column '{col}' is not numeric: '{text}'", row + 1)))?;
    if !v.is_finite() {
        return Err(TailError::Data(format!("row {}: column '{col}' is not finite", row + 1)));
    }
    Ok(v)
}

/// Reads the CSV and builds one tail sample and design per period, sorted by
/// period label.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Vec<PeriodData>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(&spec.path)?;
    let headers = reader.headers()?.clone();
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    load_records(spec, &headers, &records)
}

pub fn load_records(spec: &DatasetSpec, headers: &csv::StringRecord, records: &[csv::StringRecord]) -> Result<Vec<PeriodData>> {
    let y_col = column(headers, &spec.outcome)?;
    let w_col = spec.weights.as_deref().map(|w| column(headers, w)).transpose()?;
    let p_col = spec.period.as_deref().map(|p| column(headers, p)).transpose()?;

    // Resolve covariate columns into (name, extractor) pairs.
    enum Source {
        Numeric(usize),
        Level(usize, String),
    }
    let mut names = Vec::new();
    let mut sources = Vec::new();
    let mut dummy_columns = Vec::new();
    for cov in &spec.covariates {
        match cov {
            CovariateSpec::Continuous { column: c } => {
                names.push(c.clone());
                sources.push(Source::Numeric(column(headers, c)?));
            }
            CovariateSpec::Categorical { column: c, reference } => {
                let idx = column(headers, c)?;
                let mut levels: Vec<String> = records.iter().map(|r| r[idx].trim().to_string()).collect();
                levels.sort();
                levels.dedup();
                if !levels.contains(reference) {
                    return Err(TailError::Data(format!(
                        "reference level '{reference}' not found in column '{c}' (levels: {})",
                        levels.join(", ")
                    )));
                }
                for level in levels.into_iter().filter(|l| l != reference) {
                    let name = format!("{c}_{level}");
                    dummy_columns.push(name.clone());
                    names.push(name);
                    sources.push(Source::Level(idx, level));
                }
            }
            CovariateSpec::DummySet { columns, reference } => {
                if !columns.contains(reference) {
                    return Err(TailError::Config(format!(
                        "reference '{reference}' is not one of the dummy set columns {columns:?}"
                    )));
                }
                for c in columns.iter().filter(|c| *c != reference) {
                    dummy_columns.push(c.clone());
                    names.push(c.clone());
                    sources.push(Source::Numeric(column(headers, c)?));
                }
            }
        }
    }

    let mut partitions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = p_col.map_or_else(|| ALL_PERIODS.to_string(), |c| r[c].trim().to_string());
        partitions.entry(key).or_default().push(i);
    }
    if partitions.is_empty() {
        return Err(TailError::Data("no data rows".into()));
    }

    let mut out = Vec::with_capacity(partitions.len());
    for (period, rows) in partitions {
        let y_c = spec
            .topcode
            .get(&period)
            .ok_or_else(|| TailError::Config(format!("no top-code given for period '{period}'")))?;
        if !(y_c > 0.0) {
            return Err(TailError::Config(format!("top-code for period '{period}' must be positive")));
        }
        let threshold = spec
            .threshold
            .get(&period)
            .ok_or_else(|| TailError::Config(format!("no tail fraction or threshold for period '{period}'")))?;
        let outcome: Vec<f64> =
            rows.iter().map(|&i| parse_num(&records[i][y_col], &spec.outcome, i)).collect::<Result<_>>()?;
        let weights: Option<Vec<f64>> = w_col
            .map(|c| rows.iter().map(|&i| parse_num(&records[i][c], spec.weights.as_deref().unwrap(), i)).collect())
            .transpose()?;
        let (sample, kept) =
            CensoredSample::from_top_coded(&outcome, weights.as_deref(), y_c, threshold, spec.epsilon).map_err(|e| {
                TailError::Data(format!("period '{period}' ({} rows): cannot form the tail sample: {e}", rows.len()))
            })?;
        if kept.is_empty() {
            return Err(TailError::Data(format!("period '{period}': zero retained tail rows of {}", rows.len())));
        }
        let mut design_rows = Vec::with_capacity(kept.len());
        for &k in &kept {
            let rec = &records[rows[k]];
            let mut row = Vec::with_capacity(sources.len() + 1);
            row.push(1.0);
            for (name, src) in names.iter().zip(&sources) {
                row.push(match src {
                    Source::Numeric(c) => parse_num(&rec[*c], name, rows[k])?,
                    Source::Level(c, level) => f64::from(u8::from(rec[*c].trim() == level)),
                });
            }
            design_rows.push(row);
        }
        let mut all_names = vec!["intercept".to_string()];
        all_names.extend(names.iter().cloned());
        let design = DesignMatrix::from_rows(design_rows, all_names, true)?;
        out.push(PeriodData {
            period,
            sample,
            design,
            source_rows: kept.iter().map(|&k| rows[k]).collect(),
            period_rows: rows.len(),
            dummy_columns: dummy_columns.clone(),
        });
    }
    Ok(out)
}

/// Re-emits a period's retained tail as CSV under the dataset's column names:
/// period, outcome, weight, then the non-intercept design columns, with
/// shortest round-trip float text. Continuous and dummy-set covariates reload
/// under the same dataset spec; categorical columns come back expanded.
pub fn tail_to_csv(data: &PeriodData, spec: &DatasetSpec) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        spec.period.clone().unwrap_or_else(|| "period".into()),
        spec.outcome.clone(),
        spec.weights.clone().unwrap_or_else(|| "weight".into()),
    ];
    header.extend(data.design.names().iter().skip(1).cloned());
    w.write_record(&header)?;
    for i in 0..data.sample.len() {
        let mut rec = vec![data.period.clone(), format!("{}", data.sample.values()[i]), format!("{}", data.sample.weight(i))];
        rec.extend(data.design.row(i).iter().skip(1).map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| TailError::Data(e.to_string()))?).map_err(|e| TailError::Data(e.to_string()))
}

/// Rounds to six significant digits; the value's shortest text then has at
/// most six digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Significance stars for the 10%, 5% and 1% two-sided normal levels.
pub fn stars(t: f64) -> &'static str {
    use crate::regression::{Z_90, Z_95, Z_99};
    let a = t.abs();
    if a > Z_99 {
        "***"
    } else if a > Z_95 {
        "**"
    } else if a > Z_90 {
        "*"
    } else {
        ""
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| TailError::Data(e.to_string()))?).map_err(|e| TailError::Data(e.to_string()))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(TailError::from)).collect()
}

/// Files staged in memory and written together; nothing touches the disk
/// until [`OutputSet::commit`], which writes each file to a temporary name and
/// renames it into place.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|f| f.0.as_path())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
            let tmp = path.with_file_name(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e.into());
            }
            staged.push((tmp, path.clone()));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            fs::rename(&tmp, &path)?;
            written.push(path);
        }
        Ok(written)
    }
}
