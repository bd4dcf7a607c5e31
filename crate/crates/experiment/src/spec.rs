//! Experiment spec files.
//!
//! A spec is a JSON object:
//!
//! ```json
//! {
//!   "problem": "ackley2d-hetero",
//!   "methods": [
//!     "BO",
//!     {"method": "LOCBO", "label": "LOCBO-linf", "overrides": {"length_scale": "inf"}}
//!   ],
//!   "n_trials": 7,
//!   "base_seed": 0,
//!   "horizon": 50
//! }
//! ```
//!
//! Every override key is optional and mirrors a field of
//! [`BoConfig`](locbo::optimizer::BoConfig); `length_scale` also accepts the
//! string `"inf"`.

use std::path::{Path, PathBuf};

use locbo::gp::{FitOptions, HyperBounds, KernelParams};
use locbo::optimizer::{BoConfig, Method};
use locbo_rrm::problem::RrmSettings;
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, IoContext, Result};
use crate::registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthScaleSpec {
    Finite(f64),
    Named(String),
}

impl LengthScaleSpec {
    fn resolve(&self) -> Result<Option<f64>> {
        match self {
            Self::Finite(l) => Ok(Some(*l)),
            Self::Named(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => Ok(None),
            Self::Named(s) => Err(ExpError::InvalidSpec(format!(
                "length_scale must be a number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<LengthScaleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_init: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_init: Option<KernelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_bounds: Option<HyperBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_fit: Option<FitOptions>,
}

impl ConfigOverrides {
    pub fn apply(&self, mut c: BoConfig) -> Result<BoConfig> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(alpha, eta1, decay, kappa, reg, horizon, n_init, n_candidates, n_mc, n_levels);
        if let Some(l) = &self.length_scale {
            c.length_scale = l.resolve()?;
        }
        if self.gp_init.is_some() {
            c.gp.init = self.gp_init;
        }
        if self.gp_bounds.is_some() {
            c.gp.bounds = self.gp_bounds;
        }
        if self.gp_fit.is_some() {
            c.gp.fit = self.gp_fit;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub overrides: ConfigOverrides,
}

/// A method given either by name or with a label and overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Name(String),
    Entry(MethodEntry),
}

impl MethodSpec {
    fn entry(&self) -> MethodEntry {
        match self {
            Self::Name(n) => MethodEntry {
                method: n.clone(),
                label: None,
                overrides: ConfigOverrides::default(),
            },
            Self::Entry(e) => e.clone(),
        }
    }
}

fn default_trials() -> usize {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: String,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Horizon applied to every method before per-method overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrm: Option<RrmSettings>,
}

/// One method with its resolved configuration (seed of trial 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedMethod {
    pub label: String,
    pub config: BoConfig,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// Validates the spec and resolves every method's configuration.
    pub fn resolve(&self) -> Result<Vec<ResolvedMethod>> {
        if self.methods.is_empty() {
            return Err(ExpError::InvalidSpec("methods must not be empty".into()));
        }
        if self.n_trials < 1 {
            return Err(ExpError::InvalidSpec("n_trials must be at least 1".into()));
        }
        let problem = registry::problem(&self.problem, self.rrm)?;
        let mut out: Vec<ResolvedMethod> = Vec::new();
        for m in &self.methods {
            let e = m.entry();
            let method: Method = registry::method(&e.method)?;
            let mut base = registry::preset(&self.problem, method);
            if let Some(h) = self.horizon {
                base.horizon = h;
            }
            let mut config = e.overrides.apply(base)?;
            config.seed = self.trial_seed(0);
            config.gp = config.gp.resolved(problem.search_box());
            config.validate()?;
            let label = e.label.unwrap_or_else(|| method.as_str().to_string());
            if label.is_empty() || label.contains([',', '/', '\\']) {
                return Err(ExpError::InvalidSpec(format!("invalid method label '{label}'")));
            }
            if out.iter().any(|r| r.label == label) {
                return Err(ExpError::InvalidSpec(format!("duplicate method label '{label}'")));
            }
            out.push(ResolvedMethod { label, config });
        }
        Ok(out)
    }
}
