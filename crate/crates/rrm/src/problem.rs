//! The optimization problem over normalized powers and tilts, searched one
//! base station at a time.

use locbo::problems::{Objective, SearchBox};
use locbo::rng::StreamRng;
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_objective, noisy_observe};
use crate::error::{Result, RrmError};
use crate::layout::NetworkLayout;
use crate::radio::{RadioConfig, N_BS};

pub const REGISTRY_NAME: &str = "rrm-uav";

/// Base station (0-based) whose power and tilt are searched at round `t ≥ 1`.
pub fn active_bs(t: usize) -> usize {
    (t.max(1) - 1) % N_BS
}

/// Coordinates of `(p_b, θ_b)` in the normalized 18-vector.
pub fn block(b: usize) -> [usize; 2] {
    [b, N_BS + b]
}

/// Writes `(p_b, θ_b)` for the round's base station into a copy of `x`.
pub fn embed(x: &[f64], t: usize, pair: [f64; 2]) -> Result<Vec<f64>> {
    if x.len() != 2 * N_BS {
        return Err(RrmError::DimensionMismatch {
            expected: 2 * N_BS,
            got: x.len(),
        });
    }
    let mut out = x.to_vec();
    let [i, j] = block(active_bs(t));
    out[i] = pair[0];
    out[j] = pair[1];
    Ok(out)
}

pub fn extract(x: &[f64], t: usize) -> [f64; 2] {
    let [i, j] = block(active_bs(t));
    [x[i], x[j]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrmSettings {
    /// Fading draws averaged per observation.
    pub n_ch: usize,
    /// Fading draws of the ground-truth estimate.
    pub n_eval: usize,
    pub eval_seed: u64,
    pub lambda_gu: f64,
}

impl Default for RrmSettings {
    fn default() -> Self {
        Self {
            n_ch: 1,
            n_eval: 10_000,
            eval_seed: 0x5eed_0f_ca9a,
            lambda_gu: 0.7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RrmProblem {
    pub layout: NetworkLayout,
    pub settings: RrmSettings,
    bounds: SearchBox,
    name: String,
}

impl RrmProblem {
    pub fn new(layout: NetworkLayout, settings: RrmSettings) -> Result<Self> {
        if settings.n_ch == 0 || settings.n_eval == 0 {
            return Err(RrmError::InvalidParameter("draw counts must be positive".into()));
        }
        let bounds = SearchBox::cube(2 * N_BS, 0.0, 1.0).expect("unit cube");
        Ok(Self {
            layout,
            settings,
            bounds,
            name: REGISTRY_NAME.to_string(),
        })
    }

    pub fn standard() -> Self {
        Self::new(NetworkLayout::standard(), RrmSettings::default()).expect("default settings are valid")
    }

    pub fn config(&self, x: &[f64]) -> Result<RadioConfig> {
        RadioConfig::from_normalized(x, &self.layout.constants, self.settings.lambda_gu)
    }
}

impl Objective for RrmProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn search_box(&self) -> &SearchBox {
        &self.bounds
    }

    /// Ground-truth capacity with the dedicated evaluation seed.
    fn value(&self, x: &[f64]) -> locbo::Result<f64> {
        self.bounds.check(x)?;
        let cfg = self.config(x)?;
        Ok(capacity_objective(&self.layout, &cfg, self.settings.n_eval, self.settings.eval_seed)?.mean)
    }

    fn observe(&self, x: &[f64], rng: &mut StreamRng) -> locbo::Result<f64> {
        self.bounds.check(x)?;
        let cfg = self.config(x)?;
        Ok(noisy_observe(&self.layout, &cfg, self.settings.n_ch, rng)?)
    }

    fn known_max(&self) -> Option<(Vec<f64>, f64)> {
        None
    }

    fn b_xi(&self) -> Option<f64> {
        None
    }

    fn active_coordinates(&self, round: usize) -> Option<Vec<usize>> {
        Some(block(active_bs(round)).to_vec())
    }
}
