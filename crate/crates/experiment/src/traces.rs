//! Per-trial trace files.
//!
//! CSV columns: `t, x0..x{d-1}, y, L, U, lambda, covered, acq, incumbent,
//! regret, incumbent_f`. Empty cells mark values a method does not produce.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use locbo::optimizer::Trace;

use crate::error::{ExpError, IoContext, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..dim).map(|i| format!("x{i}")));
    h.extend(
        ["y", "L", "U", "lambda", "covered", "acq", "incumbent", "regret", "incumbent_f"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub fn trace_stem(label: &str, trial: usize) -> String {
    format!("{label}_trial{trial}")
}

pub fn write_csv(trace: &Trace, path: &Path) -> Result<()> {
    let dim = trace.x_hat.len();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(dim))?;
    for r in &trace.rounds {
        let mut row = vec![r.t.to_string()];
        row.extend(r.x.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(r.y));
        row.push(opt(r.lower));
        row.push(opt(r.upper));
        row.push(opt(r.lambda));
        row.push(r.covered.map(|c| (c as u8).to_string()).unwrap_or_default());
        row.push(opt(r.acq));
        row.push(fmt_f64(r.incumbent));
        row.push(opt(r.regret));
        row.push(fmt_f64(r.incumbent_f));
        w.write_record(row)?;
    }
    w.flush().at(path)?;
    Ok(())
}

pub fn write_json(trace: &Trace, path: &Path) -> Result<()> {
    let file = File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, trace)?;
    w.flush().at(path)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Trace> {
    let text = std::fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Per-round metric from a trace CSV: `regret` when present, otherwise
/// `incumbent_f`.
pub fn read_metric_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ExpError::InvalidSpec(format!("{} lacks column {name}", path.display())))
    };
    let (reg, inc) = (col("regret")?, col("incumbent_f")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let cell = if rec[reg].is_empty() { &rec[inc] } else { &rec[reg] };
        out.push(cell.parse::<f64>().map_err(|e| ExpError::InvalidSpec(format!("bad number '{cell}': {e}")))?);
    }
    Ok(out)
}

pub fn trace_paths(dir: &Path, label: &str, trial: usize) -> (PathBuf, PathBuf) {
    let stem = trace_stem(label, trial);
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}
