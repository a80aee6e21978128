//! Report emission (CSV/JSON) and reference-trajectory CSV I/O.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use eqgraph::ReferenceTrajectory;

use crate::scenario::BenchReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str =
    "scenario,N,iterations,mean_iter_time_s,total_time_s,constraint_violation,rmse_vs_kkt,termination";

/// Writes the reports to `out`. The CSV column set is fixed so downstream
/// plotting stays stable; an absent RMSE leaves the column empty.
pub fn emit_report<W: Write>(
    reports: &[BenchReport],
    format: ReportFormat,
    out: &mut W,
) -> io::Result<()> {
    match format {
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in reports {
                let rmse = r
                    .rmse_vs_kkt
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.scenario,
                    r.n,
                    r.iterations,
                    r.mean_iter_time_s,
                    r.total_time_s,
                    r.constraint_violation,
                    rmse,
                    r.termination
                )?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, reports)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads a reference CSV with header `t,velocity`. Timestamps must be
/// strictly increasing at a fixed step, which becomes the trajectory dt.
pub fn read_reference_csv(path: &Path) -> io::Result<ReferenceTrajectory> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| invalid("empty reference file"))??;
    if header.trim() != "t,velocity" {
        return Err(invalid(&format!(
            "expected header 't,velocity', got '{header}'"
        )));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: f64 = parse_field(fields.next(), line_no + 2, "t")?;
        let v: f64 = parse_field(fields.next(), line_no + 2, "velocity")?;
        times.push(t);
        samples.push(v);
    }
    if samples.len() < 2 {
        return Err(invalid("reference needs at least 2 samples"));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(invalid("timestamps must be strictly increasing"));
    }
    for pair in times.windows(2) {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(invalid("timestamps must advance at a fixed step"));
        }
    }
    Ok(ReferenceTrajectory { samples, dt })
}

pub fn write_reference_csv<W: Write>(reference: &ReferenceTrajectory, out: &mut W) -> io::Result<()> {
    writeln!(out, "t,velocity")?;
    for (k, v) in reference.samples.iter().enumerate() {
        writeln!(out, "{},{}", k as f64 * reference.dt, v)?;
    }
    Ok(())
}

fn parse_field(field: Option<&str>, line: usize, name: &str) -> io::Result<f64> {
    field
        .ok_or_else(|| invalid(&format!("line {line}: missing {name} column")))?
        .trim()
        .parse()
        .map_err(|_| invalid(&format!("line {line}: {name} is not a number")))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}
