//! Shannon rates, the weighted capacity objective and its noisy estimate.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RrmError};
use crate::layout::{NetworkLayout, UserKind};
use crate::radio::RadioConfig;

/// Channel draws per independent random stream in the Monte-Carlo estimate.
const BLOCK: usize = 256;

/// `log₂(1 + signal / (interference + noise))`.
pub fn shannon_rate(signal: f64, interference: f64, noise: f64) -> f64 {
    (1.0 + signal / (interference + noise)).log2()
}

/// Precomputed per-link received powers for one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator {
    /// `p_b·g_{b,k}` indexed `[user][bs]`.
    rx: Vec<Vec<f64>>,
    serving: Vec<usize>,
    weights: Vec<f64>,
    noise: f64,
    n_bs: usize,
}

impl Evaluator {
    pub fn new(layout: &NetworkLayout, config: &RadioConfig) -> Result<Self> {
        let gains = layout.gain_matrix(&config.tilts_deg)?;
        let powers = config.powers_watts();
        let rx = gains
            .iter()
            .map(|row| row.iter().zip(&powers).map(|(g, p)| g * p).collect())
            .collect();
        let n_gu = layout.count(UserKind::Gu).max(1) as f64;
        let n_uav = layout.count(UserKind::Uav).max(1) as f64;
        // The tradeoff weight multiplies the UAV sum.
        let weights = layout
            .users
            .iter()
            .map(|u| match u.kind {
                UserKind::Uav => config.lambda_gu / n_uav,
                UserKind::Gu => (1.0 - config.lambda_gu) / n_gu,
            })
            .collect();
        Ok(Self {
            rx,
            serving: layout.association.clone(),
            weights,
            noise: config.noise_watts,
            n_bs: layout.bs.len(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.rx.len()
    }

    /// Rate of user `k` given fading power gains `|h_{b,k}|²` for every `b`.
    pub fn rate(&self, k: usize, h2: &[f64]) -> f64 {
        let s = self.serving[k];
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (b, (rx, h)) in self.rx[k].iter().zip(h2).enumerate() {
            if b == s {
                signal = rx * h;
            } else {
                interference += rx * h;
            }
        }
        shannon_rate(signal, interference, self.noise)
    }

    /// Weighted rate sum for one draw; `h2` is laid out `[user][bs]` flat.
    pub fn weighted_rate(&self, h2: &[f64]) -> f64 {
        (0..self.n_users())
            .map(|k| self.weights[k] * self.rate(k, &h2[k * self.n_bs..(k + 1) * self.n_bs]))
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend((0..self.n_users() * self.n_bs).map(|_| rng.sample::<f64, _>(Exp1)));
        self.weighted_rate(buf)
    }
}

/// Rate of one user for given fading power gains `|h_b|²`, one per base station.
pub fn user_rate(layout: &NetworkLayout, config: &RadioConfig, k: usize, h2: &[f64]) -> Result<f64> {
    if h2.len() != layout.bs.len() {
        return Err(RrmError::DimensionMismatch {
            expected: layout.bs.len(),
            got: h2.len(),
        });
    }
    if k >= layout.n_users() {
        return Err(RrmError::InvalidParameter(format!("no user {k}")));
    }
    let s = layout.association[k];
    let powers = config.powers_watts();
    let mut signal = 0.0;
    let mut interference = 0.0;
    for b in 0..layout.bs.len() {
        let rx = powers[b] * layout.large_scale_gain(b, k, config.tilts_deg[b])? * h2[b];
        if b == s {
            signal = rx;
        } else {
            interference += rx;
        }
    }
    Ok(shannon_rate(signal, interference, config.noise_watts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Monte-Carlo estimate of the expected weighted rate over Rayleigh fading.
/// Draws are split into blocks with their own streams, so the result does not
/// depend on the thread count.
pub fn capacity_objective(
    layout: &NetworkLayout,
    config: &RadioConfig,
    n_draws: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if n_draws == 0 {
        return Err(RrmError::InvalidParameter("need at least one channel draw".into()));
    }
    let ev = Evaluator::new(layout, config)?;
    let n_blocks = n_draws.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = locbo::rng::stream(seed, &[blk as u64]);
            let mut buf = Vec::new();
            let n = BLOCK.min(n_draws - blk * BLOCK);
            (0..n).fold((0.0, 0.0), |(s, s2), _| {
                let v = ev.sample(&mut rng, &mut buf);
                (s + v, s2 + v * v)
            })
        })
        .collect();
    let (sum, sum2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    let n = n_draws as f64;
    let mean = sum / n;
    let var = if n_draws > 1 {
        ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(CapacityEstimate {
        mean,
        std_error: (var / n).sqrt(),
        draws: n_draws,
    })
}

/// Average weighted rate over caller-supplied fading draws, each laid out
/// `[user][bs]` flat.
pub fn objective_with_channels(layout: &NetworkLayout, config: &RadioConfig, draws: &[Vec<f64>]) -> Result<f64> {
    let ev = Evaluator::new(layout, config)?;
    let len = ev.n_users() * ev.n_bs;
    if let Some(d) = draws.iter().find(|d| d.len() != len) {
        return Err(RrmError::DimensionMismatch {
            expected: len,
            got: d.len(),
        });
    }
    if draws.is_empty() {
        return Err(RrmError::InvalidParameter("need at least one channel draw".into()));
    }
    Ok(draws.iter().map(|d| ev.weighted_rate(d)).sum::<f64>() / draws.len() as f64)
}

/// Empirical average of the weighted rate over `n_ch` fading draws.
pub fn noisy_observe<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    config: &RadioConfig,
    n_ch: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_ch == 0 {
        return Err(RrmError::InvalidParameter("n_ch must be at least 1".into()));
    }
    let ev = Evaluator::new(layout, config)?;
    let mut buf = Vec::new();
    Ok((0..n_ch).map(|_| ev.sample(rng, &mut buf)).sum::<f64>() / n_ch as f64)
}
