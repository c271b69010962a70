//! JSON-lines traces: one header object, then one [`IterationRecord`] per
//! oracle call.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IterationRecord, RunOutput, SolverConfig, Termination};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub problem_id: usize,
    pub problem_name: String,
    pub config: SolverConfig,
    pub termination: Option<Termination>,
    pub error: Option<String>,
    pub oracle_calls: usize,
    pub f_best: f64,
}

impl TraceHeader {
    pub fn new(problem_id: usize, problem_name: &str, run: &RunOutput) -> Self {
        Self {
            problem_id,
            problem_name: problem_name.to_string(),
            config: run.config.clone(),
            termination: run.termination,
            error: run.error.as_ref().map(|e| e.to_string()),
            oracle_calls: run.state.oracle_calls,
            f_best: run.state.f_best,
        }
    }
}

pub fn write_trace(
    path: &Path,
    header: &TraceHeader,
    records: &[IterationRecord],
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(path: &Path) -> std::io::Result<(TraceHeader, Vec<IterationRecord>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "empty trace"))??;
    let header = serde_json::from_str(&header_line)?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, records))
}
