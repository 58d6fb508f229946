//! Report rows, CSV/JSON serialization and summary statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, ExperimentKind};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "trial,m,m_prime,res_norm,sigma_m,ratio,flag";

/// Fixed 17-significant-digit formatting; `nan` for NaN.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// `ratio = res_norm / sigma_m` against an exhaustive oracle.
    Ok,
    /// `ratio = res_norm / sigma_m` against a beam-search upper bound.
    Capped,
    /// `sigma_m` is numerically zero; `ratio` holds the absolute error.
    SigmaZero,
    /// Thresholding error after `m` terms.
    Tga,
    /// WCGA error after `m` iterations.
    WcgaM,
    /// WCGA error after `ceil(m ln(m + 1))` iterations.
    WcgaMln,
    /// Phase row: recovered (`ratio` is the relative residual).
    Success,
    Failure,
    /// Rate row: `ratio` is the rate constant required at this `m`.
    Rate,
    /// The trial failed; see the JSON report.
    Error,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Ok => "ok",
            Flag::Capped => "capped",
            Flag::SigmaZero => "sigma_zero",
            Flag::Tga => "tga",
            Flag::WcgaM => "wcga_m",
            Flag::WcgaMln => "wcga_mln",
            Flag::Success => "success",
            Flag::Failure => "failure",
            Flag::Rate => "rate",
            Flag::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub trial: usize,
    pub m: usize,
    pub m_prime: usize,
    pub res_norm: f64,
    pub sigma_m: f64,
    pub ratio: f64,
    pub flag: Flag,
}

impl Row {
    pub fn error(trial: usize) -> Self {
        Self {
            trial,
            m: 0,
            m_prime: 0,
            res_norm: f64::NAN,
            sigma_m: f64::NAN,
            ratio: f64::NAN,
            flag: Flag::Error,
        }
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.m,
            r.m_prime,
            fmt_f64(r.res_norm),
            fmt_f64(r.sigma_m),
            fmt_f64(r.ratio),
            r.flag.as_str()
        );
    }
    out
}

/// Median of the finite values, `None` if there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn max_finite(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    values.into_iter().filter(|x| x.is_finite()).reduce(f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerM {
    pub m: usize,
    pub m_prime: usize,
    pub budget_c: f64,
    pub median_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    /// Median over trials of `min { k : ||f_k|| <= C sigma_m } / m`.
    pub phi_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessMatrix {
    pub k_values: Vec<usize>,
    pub budget_factors: Vec<f64>,
    /// `rates[i][j]`: success rate for `k_values[i]`, `budget_factors[j]`.
    pub rates: Vec<Vec<f64>>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgaSummary {
    /// Log-log slope of the median TGA/oracle ratio against `m`.
    pub growth_exponent: Option<f64>,
    /// Fraction of (trial, m) pairs with TGA ratio >= WCGA(m ln m) ratio.
    pub tga_not_better_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub fit_range: [usize; 2],
    pub slopes: Vec<Option<f64>>,
    pub median_slope: Option<f64>,
    pub c_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub ratio_max: Option<f64>,
    pub ratio_median: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_m: Vec<PerM>,
    /// Log-log slope of `phi_hat` against `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<SuccessMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tga: Option<TgaSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSummary>,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    /// Sparsity level (phase runs) or target support size.
    pub k: usize,
    pub f0_norm: f64,
    pub eps: f64,
    /// `l1` norm of the clean target's coefficients.
    pub l1_norm: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub dictionary_size: usize,
    pub rows: usize,
    pub summary: Summary,
    pub trials: Vec<TrialSummary>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a report, refusing other schema versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::config("schema_version", "missing or not an integer"))?;
        if found != u64::from(REPORT_SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: found as u32,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_pair(dir: &Path, stem: &str, rows: &[Row], report: &ExperimentReport) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&csv, rows_to_csv(rows))?;
    fs::write(&json, report.to_json())?;
    Ok((csv, json))
}
