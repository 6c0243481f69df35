//! Row types and writers. CSV headers are fixed per command and written even
//! when there are no rows; floats use shortest round-trip formatting.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub check_id: String,
    pub params: String,
    pub computed: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const VERIFY_HEADER: &[&str] =
    &["check_id", "params", "computed", "expected", "rel_error", "tolerance", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub t: f64,
    pub z: f64,
    pub x_weighted: f64,
    pub x: f64,
    /// Weighted deviation from the power solution, when it applies.
    pub residual: Option<f64>,
}

pub const SOLVE_HEADER: &[&str] = &["t", "z", "x_weighted", "x", "residual"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub m: f64,
    pub m_star: Option<f64>,
    pub classification: String,
    pub t_blow_estimate: Option<f64>,
    pub final_norm: Option<f64>,
    pub mesh_levels_used: Option<usize>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &[&str] = &[
    "alpha",
    "beta",
    "mu",
    "m",
    "m_star",
    "classification",
    "t_blow_estimate",
    "final_norm",
    "mesh_levels_used",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub theta: f64,
    pub weak_lhs: f64,
    pub weak_rhs: f64,
    pub pivot_numeric: f64,
    pub pivot_inner: f64,
    pub constant: f64,
    pub vanishing_bound: f64,
    pub holder_nonlinear: f64,
    pub holder_dual: f64,
    pub young_ok: bool,
    pub directions_ok: bool,
}

pub const AUDIT_HEADER: &[&str] = &[
    "T",
    "theta",
    "weak_lhs",
    "weak_rhs",
    "pivot_numeric",
    "pivot_inner",
    "constant",
    "vanishing_bound",
    "holder_nonlinear",
    "holder_dual",
    "young_ok",
    "directions_ok",
];

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_rows<R: Serialize>(
    rows: &[R],
    header: &[&str],
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            let mut csv = csv::WriterBuilder::new()
                .has_headers(false)
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut w);
            csv.write_record(header)?;
            for r in rows {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}
