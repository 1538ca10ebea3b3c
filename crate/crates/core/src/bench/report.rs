use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::BenchmarkReport;
use crate::error::{DcaError, Result};
use crate::solvers::SolverTrace;

pub const CSV_HEADER: [&str; 13] = [
    "solver",
    "m",
    "n",
    "K",
    "lambda_multiple",
    "tol",
    "trials",
    "mean_iter",
    "mean_init",
    "mean_titer",
    "mean_fval",
    "mean_seconds",
    "max_flag",
];

/// Column whose value depends on the machine and load; everything else is
/// a function of the inputs.
pub const TIMING_COLUMN: &str = "mean_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = DcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(DcaError::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV rendering of `report`, one row per cell in report order.
pub fn report_csv(report: &BenchmarkReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| DcaError::Serialization(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for c in &report.cells {
        w.write_record([
            c.solver.name().to_string(),
            c.size.rows.to_string(),
            c.size.cols.to_string(),
            c.size.sparsity.to_string(),
            c.lambda_multiple.to_string(),
            c.tol.to_string(),
            c.trials.to_string(),
            opt(c.mean_iter),
            opt(c.mean_init),
            opt(c.mean_titer),
            opt(c.mean_fval),
            opt(c.mean_seconds),
            if c.max_flag { "Max".into() } else { String::new() },
        ])
        .map_err(ser)?;
    }
    w.into_inner().map_err(|e| DcaError::Serialization(e.to_string()))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DcaError + '_ {
    move |source| DcaError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` next to `path` and renames into place, so readers never
/// see a half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| DcaError::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(path))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = match format {
        ReportFormat::Csv => report_csv(report)?,
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| DcaError::Serialization(e.to_string()))?;
            v.push(b'\n');
            v
        }
    };
    write_atomic(path, &bytes)
}

pub fn read_json_report(path: &Path) -> Result<BenchmarkReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DcaError::Serialization(e.to_string()))
}

/// Writes the per-iteration trace of one run.
pub fn write_trace(trace: &SolverTrace, path: &Path) -> Result<()> {
    let mut buf = BufWriter::new(Vec::new());
    trace.write_lines(&mut buf).map_err(io_err(path))?;
    let bytes = buf.into_inner().map_err(|e| io_err(path)(e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Drops the timing column so two CSV renderings can be compared.
pub fn strip_timing(csv_text: &str) -> String {
    let idx = CSV_HEADER.iter().position(|c| *c == TIMING_COLUMN).unwrap();
    let mut out = String::new();
    for line in csv_text.lines() {
        let kept: Vec<&str> = line
            .split(',')
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, f)| f)
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}
