//! On-disk run artifacts: factors, per-epoch reports, timings, manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so report
//! files parse back to bitwise-identical values and deterministic runs
//! produce byte-identical files. Wall times live in a separate timings file
//! because they are the one per-epoch quantity that is not reproducible.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EvalResult;
use crate::model::FactorPair;
use crate::trainer::{EpochReport, TrainConfig};

use super::config::DatasetOptions;

pub const REPORT_HEADER: &str = "epoch\ttrain_rmse\tvalid_rmse\tvalid_mae\tmean_lambda";
pub const TIMINGS_HEADER: &str = "epoch\twall_time_ms";

pub fn write_factors(path: &Path, factors: &FactorPair) -> Result<()> {
    fs::write(path, serde_json::to_string(factors)?)?;
    Ok(())
}

pub fn read_factors(path: &Path) -> Result<FactorPair> {
    let text = fs::read_to_string(path)?;
    let factors: FactorPair = serde_json::from_str(&text)?;
    factors.validate()?;
    Ok(factors)
}

pub fn write_report(path: &Path, reports: &[EpochReport]) -> Result<()> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.epoch, r.train_rmse, r.valid_rmse, r.valid_mae, r.mean_lambda
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_timings(path: &Path, reports: &[EpochReport]) -> Result<()> {
    let mut out = String::from(TIMINGS_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{}\t{}\n", r.epoch, r.wall_time_ms));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a report file (and optionally its timings companion) back into
/// epoch records.
pub fn read_report(report_path: &Path, timings_path: Option<&Path>) -> Result<Vec<EpochReport>> {
    let text = fs::read_to_string(report_path)?;
    let mut reports = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != REPORT_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unexpected report header '{line}'"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::Parse { line: idx + 1, message: "expected 5 fields".into() });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid float '{s}'"),
            })
        };
        reports.push(EpochReport {
            epoch: fields[0].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid epoch '{}'", fields[0]),
            })?,
            train_rmse: parse_f(fields[1])?,
            valid_rmse: parse_f(fields[2])?,
            valid_mae: parse_f(fields[3])?,
            mean_lambda: parse_f(fields[4])?,
            wall_time_ms: 0,
        });
    }
    if let Some(path) = timings_path {
        let text = fs::read_to_string(path)?;
        for (line, report) in text.lines().skip(1).zip(&mut reports) {
            if let Some((_, ms)) = line.split_once('\t') {
                report.wall_time_ms = ms.parse().unwrap_or(0);
            }
        }
    }
    Ok(reports)
}

/// Everything needed to reproduce a run bitwise, plus its outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub dataset: DatasetOptions,
    pub config: TrainConfig,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub final_eval: EvalResult,
    pub factors_path: String,
    pub report_path: String,
    pub timings_path: String,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
