//! Coverage audits of conformal runs.

use std::path::Path;

use locbo::conformal::coverage_bound;
use locbo::optimizer::Trace;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::traces::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub method: String,
    pub trial: usize,
    pub rounds: usize,
    /// Fraction of rounds whose observation fell outside the prediction set.
    pub y_miscoverage: f64,
    /// `α + β/√T + κ`, for localized conformal runs.
    pub y_bound: Option<f64>,
    /// Fraction of rounds whose noiseless value fell outside the set.
    pub f_miscoverage: f64,
    /// `y_bound / b_ξ`.
    pub f_bound: Option<f64>,
    pub b_xi: Option<f64>,
}

impl AuditRow {
    pub fn y_bound_holds(&self) -> Option<bool> {
        self.y_bound.map(|b| self.y_miscoverage <= b)
    }

    pub fn f_bound_holds(&self) -> Option<bool> {
        self.f_bound.map(|b| self.f_miscoverage <= b)
    }
}

fn rate(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return f64::NAN;
    }
    flags.iter().filter(|c| !**c).count() as f64 / flags.len() as f64
}

/// Audit of one trace; `None` when the method records no prediction sets.
pub fn audit_trace(label: &str, trial: usize, trace: &Trace, b_xi: Option<f64>) -> Option<AuditRow> {
    let covered = trace.covered_flags();
    if covered.is_empty() {
        return None;
    }
    let y_bound = trace.audit.map(|p| coverage_bound(&p, covered.len()).0);
    Some(AuditRow {
        method: label.to_string(),
        trial,
        rounds: covered.len(),
        y_miscoverage: rate(&covered),
        y_bound,
        f_miscoverage: rate(&trace.f_covered_flags()),
        f_bound: y_bound.zip(b_xi).map(|(b, xi)| b / xi),
        b_xi,
    })
}

pub fn write_csv(rows: &[AuditRow], path: &Path) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "trial",
        "rounds",
        "y_miscoverage",
        "y_bound",
        "f_miscoverage",
        "f_bound",
        "b_xi",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.trial.to_string(),
            r.rounds.to_string(),
            fmt_f64(r.y_miscoverage),
            opt(r.y_bound),
            fmt_f64(r.f_miscoverage),
            opt(r.f_bound),
            opt(r.b_xi),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
