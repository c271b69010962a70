//! csv, json and markdown renderings of suite results.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ResultRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

/// The csv columns: everything but the wall time, so that reports of
/// identical runs are byte-identical.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    problem_id: usize,
    problem: String,
    algorithm: String,
    k_steps: Option<usize>,
    oracle_calls: usize,
    f_best: f64,
    final_gap: f64,
    status: String,
    error: Option<String>,
    max_kkt_residual: f64,
}

impl From<&ResultRow> for CsvRow {
    fn from(r: &ResultRow) -> Self {
        Self {
            problem_id: r.problem_id,
            problem: r.problem.clone(),
            algorithm: r.algorithm.clone(),
            k_steps: r.k_steps,
            oracle_calls: r.oracle_calls,
            f_best: r.f_best,
            final_gap: r.final_gap,
            status: r.status.clone(),
            error: r.error.clone(),
            max_kkt_residual: r.max_kkt_residual,
        }
    }
}

impl From<CsvRow> for ResultRow {
    fn from(r: CsvRow) -> Self {
        Self {
            problem_id: r.problem_id,
            problem: r.problem,
            algorithm: r.algorithm,
            k_steps: r.k_steps,
            oracle_calls: r.oracle_calls,
            f_best: r.f_best,
            final_gap: r.final_gap,
            status: r.status,
            error: r.error,
            max_kkt_residual: r.max_kkt_residual,
            wall_time_s: 0.0,
        }
    }
}

fn report_error(e: impl std::fmt::Display) -> Error {
    Error::Report(e.to_string())
}

pub fn emit_report<W: Write>(rows: &[ResultRow], format: ReportFormat, out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to report".into()));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(CsvRow::from(row)).map_err(report_error)?;
            }
            w.flush().map_err(report_error)
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(report_error)?;
            out.write_all(b"\n").map_err(report_error)
        }
        ReportFormat::Markdown => {
            let mut out = out;
            out.write_all(markdown(rows).as_bytes())
                .map_err(report_error)
        }
    }
}

/// Writes the report to `path`, creating parent directories.
pub fn write_report(rows: &[ResultRow], format: ReportFormat, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    emit_report(rows, format, &mut out)?;
    out.flush().map_err(io)
}

/// Reads a csv report back. The wall time is not stored and comes back as 0.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize::<CsvRow>()
        .map(|r| r.map(ResultRow::from).map_err(report_error))
        .collect()
}

fn markdown(rows: &[ResultRow]) -> String {
    let mut algorithms: Vec<&str> = Vec::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    let mut s = String::new();
    for (i, algo) in algorithms.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let group: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == *algo).collect();
        let with_k = group.iter().any(|r| r.k_steps.is_some());
        let _ = writeln!(s, "## {algo}\n");
        if with_k {
            s.push_str("| Pb | Name | #k | #fg | f - f* | Status |\n");
            s.push_str("|---:|:-----|---:|---:|-------:|:-------|\n");
        } else {
            s.push_str("| Pb | Name | #fg | f - f* | Status |\n");
            s.push_str("|---:|:-----|---:|-------:|:-------|\n");
        }
        for r in group {
            let _ = write!(s, "| {} | {} | ", r.problem_id, r.problem);
            if with_k {
                match r.k_steps {
                    Some(k) => {
                        let _ = write!(s, "{k} | ");
                    }
                    None => s.push_str("- | "),
                }
            }
            let _ = writeln!(
                s,
                "{} | {:.2E} | {} |",
                r.oracle_calls, r.final_gap, r.status
            );
        }
    }
    s
}
