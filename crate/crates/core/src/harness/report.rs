//! Check results, their serialization, and the accumulators the checks use
//! to turn sampled inequalities into one measured constant.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Short statement of the property being checked.
    #[serde(rename = "paper_ref")]
    pub anchor: String,
    pub status: Status,
    pub measured_constant: Option<f64>,
    pub samples: usize,
    pub tolerance: Option<f64>,
    pub details: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub type Report = Vec<CheckResult>;

/// Process exit code for a report: 0 iff nothing failed.
pub fn exit_code(report: &[CheckResult]) -> i32 {
    if report.iter().all(CheckResult::passed) {
        0
    } else {
        1
    }
}

pub fn render_report(report: &[CheckResult], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in report {
                w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
            }
            if report.is_empty() {
                w.write_record(["name", "paper_ref", "status", "measured_constant", "samples", "tolerance", "details"])
                    .map_err(|e| Error::Format(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Format(e.to_string()))
        }
    }
}

pub fn emit_report(report: &[CheckResult], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let bytes = render_report(report, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn parse_report(json: &str) -> Result<Report> {
    serde_json::from_str(json).map_err(|e| Error::Format(e.to_string()))
}

/// Largest observed ratio `lhs / rhs` over samples, with zero/zero counted as
/// a satisfied sample and `lhs > 0 = rhs` as a violation.
#[derive(Clone, Debug, Default)]
pub struct RatioAcc {
    pub max: f64,
    pub samples: usize,
    pub skipped: usize,
    pub violations: usize,
    pub worst: String,
}

impl RatioAcc {
    pub fn new() -> RatioAcc {
        RatioAcc::default()
    }

    /// `tol` is the absolute level below which a side counts as zero.
    pub fn add(&mut self, lhs: f64, rhs: f64, tol: f64, label: impl FnOnce() -> String) {
        if !(lhs.is_finite() && rhs.is_finite()) {
            self.violations += 1;
            if self.worst.is_empty() {
                self.worst = format!("non-finite value at {}", label());
            }
            return;
        }
        self.samples += 1;
        if rhs <= tol {
            if lhs > tol {
                self.violations += 1;
                if self.worst.is_empty() || self.max.is_finite() {
                    self.worst = format!("right side vanishes at {}", label());
                }
                self.max = f64::INFINITY;
            }
            return;
        }
        let r = lhs / rhs;
        if r > self.max {
            self.max = r;
            if self.violations == 0 {
                self.worst = label();
            }
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: &RatioAcc) {
        if other.max > self.max {
            self.max = other.max;
            self.worst = other.worst.clone();
        }
        self.samples += other.samples;
        self.skipped += other.skipped;
        self.violations += other.violations;
    }

    pub fn skip_fraction(&self) -> f64 {
        let total = self.samples + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.skipped as f64 / total as f64
        }
    }

    /// Measured constant, 0 when every sample was zero on both sides.
    pub fn constant(&self) -> f64 {
        self.max
    }
}

/// Builds results with the shared skip and finiteness policy.
pub struct Judge {
    pub skip_cap: f64,
}

impl Judge {
    /// Pass iff no violation, the constant is finite, coverage is adequate
    /// and (when given) the constant is within `bound`.
    pub fn ratio(&self, name: String, anchor: &str, acc: &RatioAcc, bound: Option<f64>, extra: &str) -> CheckResult {
        let c = acc.constant();
        let mut notes = Vec::new();
        let mut status = Status::Pass;
        if acc.samples == 0 {
            status = if acc.skipped > 0 { Status::Fail } else { Status::Skipped };
            notes.push(if acc.skipped > 0 {
                format!("all {} samples skipped", acc.skipped)
            } else {
                "no applicable samples".to_string()
            });
        }
        if acc.violations > 0 {
            status = Status::Fail;
            notes.push(format!("{} violations", acc.violations));
        }
        if !c.is_finite() {
            status = Status::Fail;
        }
        if let Some(b) = bound {
            if c > b {
                status = Status::Fail;
                notes.push(format!("constant {c:.4e} exceeds {b}"));
            }
        }
        if acc.skip_fraction() > self.skip_cap {
            status = Status::Fail;
            notes.push(format!("{} of {} samples skipped (cap {:.0}%)", acc.skipped, acc.samples + acc.skipped, 100.0 * self.skip_cap));
        } else if acc.skipped > 0 {
            notes.push(format!("{} skipped", acc.skipped));
        }
        if !acc.worst.is_empty() && acc.samples > 0 {
            notes.push(format!("max at {}", acc.worst));
        }
        if !extra.is_empty() {
            notes.push(extra.to_string());
        }
        CheckResult {
            name,
            anchor: anchor.to_string(),
            status,
            measured_constant: Some(c),
            samples: acc.samples,
            tolerance: bound,
            details: notes.join("; "),
        }
    }
}

/// Pass iff `violations == 0`.
pub fn exact(name: String, anchor: &str, violations: usize, samples: usize, details: String) -> CheckResult {
    CheckResult {
        name,
        anchor: anchor.to_string(),
        status: if violations == 0 && samples > 0 {
            Status::Pass
        } else if samples == 0 {
            Status::Skipped
        } else {
            Status::Fail
        },
        measured_constant: Some(violations as f64),
        samples,
        tolerance: Some(0.0),
        details: if violations == 0 { details } else { format!("{violations} violations; {details}") },
    }
}

/// Pass iff `value <= tol`.
pub fn bounded(name: String, anchor: &str, value: f64, tol: f64, samples: usize, details: String) -> CheckResult {
    CheckResult {
        name,
        anchor: anchor.to_string(),
        status: if value <= tol { Status::Pass } else { Status::Fail },
        measured_constant: Some(value),
        samples,
        tolerance: Some(tol),
        details,
    }
}

/// A failure caused by an error inside a module.
pub fn errored(name: String, anchor: &str, err: &Error) -> CheckResult {
    CheckResult {
        name,
        anchor: anchor.to_string(),
        status: Status::Fail,
        measured_constant: None,
        samples: 0,
        tolerance: None,
        details: format!("error: {err}"),
    }
}
