//! Result rows and their CSV / JSON serialisation.

use std::io::Write;

use serde::Serialize;

/// Status of a row that computed and validated.
pub const OK: &str = "ok";
/// Status of a row whose certificate residual exceeded [`RESIDUAL_LIMIT`].
pub const UNVALIDATED: &str = "Unvalidated";
/// Largest certificate residual for which a bound is emitted.
pub const RESIDUAL_LIMIT: f64 = 1e-7;

/// One output record. Field order fixes the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub parameter: Option<f64>,
    pub method: String,
    /// Entropy bound per round, present only for a validated certificate.
    pub certified_lower_bound: Option<f64>,
    pub raw_rate: Option<f64>,
    pub clamped_rate: Option<f64>,
    pub certificate_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub runtime_seconds: f64,
    pub status: String,
}

impl ResultRow {
    pub fn failed(
        parameter: Option<f64>,
        method: impl Into<String>,
        status: impl Into<String>,
    ) -> Self {
        Self {
            parameter,
            method: method.into(),
            certified_lower_bound: None,
            raw_rate: None,
            clamped_rate: None,
            certificate_residual: None,
            iterations: None,
            runtime_seconds: 0.0,
            status: status.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == OK
    }
}

pub fn write_csv(rows: &[ResultRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "parameter",
            "method",
            "certified_lower_bound",
            "raw_rate",
            "clamped_rate",
            "certificate_residual",
            "iterations",
            "runtime_seconds",
            "status",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(rows: &[ResultRow], mut out: impl Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)
}
