use std::io::{self, Write};

use crate::signal::Signal;

pub const TRACE_CSV_HEADER: &str = "trial_id,algorithm,n,m,pass_count,relative_error,loss";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tol,
    Budget,
    Diverged,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Tol => "tol",
            StopReason::Budget => "budget",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub pass_count: f64,
    pub relative_error: Option<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub iterate: Signal,
    pub history: Vec<TracePoint>,
    pub passes_used: f64,
    pub stop_reason: StopReason,
}

impl RunTrace {
    pub fn final_relative_error(&self) -> Option<f64> {
        self.history.last().and_then(|p| p.relative_error)
    }

    /// First recorded pass count at which the relative error is at most `tol`.
    pub fn passes_to(&self, tol: f64) -> Option<f64> {
        self.history
            .iter()
            .find(|p| p.relative_error.is_some_and(|e| e <= tol))
            .map(|p| p.pass_count)
    }

    /// Writes one row per recorded point; the header is not included.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W, trial_id: usize, algorithm: &str, n: usize, m: usize) -> io::Result<()> {
        for p in &self.history {
            let rel = p.relative_error.map(fmt_num).unwrap_or_default();
            writeln!(
                out,
                "{trial_id},{algorithm},{n},{m},{},{rel},{}",
                fmt_num(p.pass_count),
                fmt_num(p.loss)
            )?;
        }
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}
