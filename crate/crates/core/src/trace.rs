//! Per-iteration metrics and their consumers.

use serde::{Deserialize, Serialize};

use crate::block::BlockVector;
use crate::error::{Error, Result};

/// Floor applied to the normalized error when the iterate hits the reference exactly.
pub const ERROR_DB_FLOOR: f64 = -320.0;

/// Column header of trace CSV files.
pub const CSV_HEADER: &str =
    "iteration,epochs,error_db,objective,kt_residual,activated_primal,activated_dual,wall_ms,macs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub epochs: f64,
    /// `20 log10(||x_n - x_inf|| / ||x_0 - x_inf||)`, `NaN` without a reference.
    pub normalized_error_db: f64,
    pub objective: f64,
    pub kt_residual: f64,
    pub activated_primal: usize,
    pub activated_dual: usize,
    pub wall_ms: f64,
    /// Cumulative multiply-accumulate count of linear-operator work, setup included.
    pub macs: u64,
}

impl TraceRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.epochs,
            self.normalized_error_db,
            self.objective,
            self.kt_residual,
            self.activated_primal,
            self.activated_dual,
            self.wall_ms,
            self.macs
        )
    }
}

/// Consumer of trace records emitted during a run.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(rec.clone());
    }
}

/// Discards every record.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &TraceRecord) {}
}

/// Writes a header line followed by one CSV row per record.
pub fn write_csv<W: std::io::Write>(mut out: W, records: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `20 log10(||x_n - x_inf|| / ||x_0 - x_inf||)` in dB, floored at [`ERROR_DB_FLOOR`].
pub fn normalized_error_db(x_n: &BlockVector, x_0: &BlockVector, x_inf: &BlockVector) -> Result<f64> {
    let denom = x_0.distance(x_inf);
    if denom == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(error_db(x_n.distance(x_inf), denom))
}

pub(crate) fn error_db(num: f64, denom: f64) -> f64 {
    if num == 0.0 {
        ERROR_DB_FLOOR
    } else {
        (20.0 * (num / denom).log10()).max(ERROR_DB_FLOOR)
    }
}
