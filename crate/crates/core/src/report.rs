//! Tabular check reports: one row per evaluated inequality.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::io::fmt_real;

/// One evaluated inequality `lhs <= rhs` with `excess = lhs - rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub param: String,
    pub grid_t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub excess: f64,
}

impl CheckRow {
    pub fn new(check: &str, param: impl Into<String>, grid_t: f64, lhs: f64, rhs: f64) -> Self {
        CheckRow { check: check.to_string(), param: param.into(), grid_t, lhs, rhs, excess: lhs - rhs }
    }
}

pub fn max_excess(rows: &[CheckRow]) -> f64 {
    rows.iter().map(|r| r.excess).fold(f64::NEG_INFINITY, f64::max)
}

pub fn write_check_csv<W: Write>(out: W, rows: &[CheckRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "param", "grid_t", "lhs", "rhs", "excess"])?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            r.param.clone(),
            fmt_real(r.grid_t),
            fmt_real(r.lhs),
            fmt_real(r.rhs),
            fmt_real(r.excess),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `tau,error` table.
pub fn write_rate_csv<W: Write>(out: W, taus: &[f64], errors: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "error"])?;
    for (t, e) in taus.iter().zip(errors) {
        w.write_record([fmt_real(*t), fmt_real(*e)])?;
    }
    w.flush()?;
    Ok(())
}
