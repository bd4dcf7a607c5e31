//! Parallel execution of an experiment and persistence of its artifacts.
//!
//! Output layout:
//!
//! ```text
//! <out>/manifest.json
//! <out>/summary.csv      method,round,mean,ci_lo,ci_hi
//! <out>/summary.json     the same plus per-trial terminal values and failures
//! <out>/audit.csv
//! <out>/traces/<label>_trial<i>.{csv,json}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use locbo::optimizer::{run, Trace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{self, AuditRow};
use crate::error::{ExpError, IoContext, Result};
use crate::registry;
use crate::spec::{ExperimentSpec, ResolvedMethod};
use crate::stats;
use crate::traces::{self, fmt_f64};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub methods: Vec<ResolvedMethod>,
    pub trial_seeds: Vec<u64>,
    /// `simple_regret` for problems with a known optimum, else `capacity`.
    pub metric: String,
    pub code_version: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub round: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub method: String,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metric: String,
    pub rows: Vec<SummaryRow>,
    /// Final metric of every completed trial, per method label.
    pub terminal: BTreeMap<String, Vec<f64>>,
    pub audits: Vec<AuditRow>,
    pub failures: Vec<TrialFailure>,
}

impl Summary {
    pub fn median_terminal(&self, label: &str) -> Option<f64> {
        self.terminal.get(label).filter(|v| !v.is_empty()).map(|v| stats::median(v))
    }
}

struct TrialOutput {
    label: String,
    trial: usize,
    result: std::result::Result<Trace, String>,
}

/// Metric series of a trace: simple regret when the optimum is known,
/// otherwise the objective at the incumbent.
pub fn metric_series(trace: &Trace) -> Vec<f64> {
    trace
        .rounds
        .iter()
        .map(|r| r.regret.unwrap_or(r.incumbent_f))
        .collect()
}

/// Aggregates per-round metric series into mean and 70% percentile band.
pub fn summarize(label: &str, series: &[Vec<f64>]) -> Vec<SummaryRow> {
    let rounds = series.iter().map(Vec::len).max().unwrap_or(0);
    (0..rounds)
        .filter_map(|i| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(i).copied()).collect();
            if vals.is_empty() {
                return None;
            }
            let (ci_lo, ci_hi) = stats::band70(&vals);
            Some(SummaryRow {
                method: label.to_string(),
                round: i + 1,
                mean: stats::mean(&vals),
                ci_lo,
                ci_hi,
            })
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "round", "mean", "ci_lo", "ci_hi"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.round.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.ci_lo),
            fmt_f64(r.ci_hi),
        ])?;
    }
    w.flush().at(path)?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| ExpError::InvalidSpec(format!("bad number '{}': {e}", &rec[i])))
        };
        out.push(SummaryRow {
            method: rec[0].to_string(),
            round: rec[1]
                .parse()
                .map_err(|e| ExpError::InvalidSpec(format!("bad round '{}': {e}", &rec[1])))?,
            mean: num(2)?,
            ci_lo: num(3)?,
            ci_hi: num(4)?,
        });
    }
    Ok(out)
}

fn write_pretty_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).at(path)
}

/// Runs every (method, trial) pair in parallel and writes all artifacts.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Summary> {
    let methods = spec.resolve()?;
    let problem = registry::problem(&spec.problem, spec.rrm)?;
    let metric = if problem.known_max().is_some() {
        "simple_regret"
    } else {
        "capacity"
    };

    let out = &opts.out_dir;
    let summary_path = out.join("summary.csv");
    if summary_path.exists() && !opts.force {
        return Err(ExpError::OutputExists(out.clone()));
    }
    let trace_dir = out.join("traces");
    fs::create_dir_all(&trace_dir).at(&trace_dir)?;

    let jobs: Vec<(&ResolvedMethod, usize)> = methods
        .iter()
        .flat_map(|m| (0..spec.n_trials).map(move |t| (m, t)))
        .collect();
    let outputs: Vec<TrialOutput> = jobs
        .par_iter()
        .map(|(m, trial)| {
            let mut config = m.config.clone();
            config.seed = spec.trial_seed(*trial);
            let result = run(problem.as_ref(), &config)
                .map_err(|e| e.to_string())
                .and_then(|trace| {
                    let (csv_path, json_path) = traces::trace_paths(&trace_dir, &m.label, *trial);
                    traces::write_csv(&trace, &csv_path)
                        .and_then(|_| traces::write_json(&trace, &json_path))
                        .map_err(|e| e.to_string())?;
                    Ok(trace)
                });
            if let Err(e) = &result {
                log::error!("{} trial {trial} failed: {e}", m.label);
            }
            TrialOutput {
                label: m.label.clone(),
                trial: *trial,
                result,
            }
        })
        .collect();

    let b_xi = problem.b_xi();
    let mut rows = Vec::new();
    let mut terminal = BTreeMap::new();
    let mut audits = Vec::new();
    let mut failures = Vec::new();
    for m in &methods {
        let mut series = Vec::new();
        let mut finals = Vec::new();
        for o in outputs.iter().filter(|o| o.label == m.label) {
            match &o.result {
                Ok(trace) => {
                    if let Some(msg) = &trace.aborted {
                        failures.push(TrialFailure {
                            method: o.label.clone(),
                            trial: o.trial,
                            message: msg.clone(),
                        });
                    }
                    let s = metric_series(trace);
                    if trace.aborted.is_none() {
                        if let Some(v) = s.last() {
                            finals.push(*v);
                        }
                    }
                    series.push(s);
                    audits.extend(audit::audit_trace(&o.label, o.trial, trace, b_xi));
                }
                Err(msg) => failures.push(TrialFailure {
                    method: o.label.clone(),
                    trial: o.trial,
                    message: msg.clone(),
                }),
            }
        }
        rows.extend(summarize(&m.label, &series));
        terminal.insert(m.label.clone(), finals);
    }

    let summary = Summary {
        metric: metric.to_string(),
        rows,
        terminal,
        audits,
        failures,
    };
    write_summary_csv(&summary.rows, &summary_path)?;
    write_pretty_json(&summary, &out.join("summary.json"))?;
    audit::write_csv(&summary.audits, &out.join("audit.csv"))?;
    let manifest = Manifest {
        spec: spec.clone(),
        methods,
        trial_seeds: (0..spec.n_trials).map(|t| spec.trial_seed(t)).collect(),
        metric: metric.to_string(),
        code_version: CODE_VERSION.to_string(),
    };
    write_pretty_json(&manifest, &out.join("manifest.json"))?;
    Ok(summary)
}

/// Recomputes the summary rows from the trace CSVs of a results directory.
pub fn summary_from_traces(dir: &Path) -> Result<Vec<SummaryRow>> {
    let manifest = Manifest::load(&dir.join("manifest.json"))?;
    let mut rows = Vec::new();
    for m in &manifest.methods {
        let mut series = Vec::new();
        for trial in 0..manifest.spec.n_trials {
            let (csv_path, _) = traces::trace_paths(&dir.join("traces"), &m.label, trial);
            if csv_path.exists() {
                series.push(traces::read_metric_csv(&csv_path)?);
            }
        }
        rows.extend(summarize(&m.label, &series));
    }
    Ok(rows)
}

/// Audits every trace JSON listed by the manifest of a results directory.
pub fn audit_dir(dir: &Path) -> Result<Vec<AuditRow>> {
    let manifest = Manifest::load(&dir.join("manifest.json"))?;
    let problem = registry::problem(&manifest.spec.problem, manifest.spec.rrm)?;
    let mut rows = Vec::new();
    for m in &manifest.methods {
        for trial in 0..manifest.spec.n_trials {
            let (_, json_path) = traces::trace_paths(&dir.join("traces"), &m.label, trial);
            if json_path.exists() {
                let trace = traces::read_json(&json_path)?;
                rows.extend(audit::audit_trace(&m.label, trial, &trace, problem.b_xi()));
            }
        }
    }
    Ok(rows)
}
