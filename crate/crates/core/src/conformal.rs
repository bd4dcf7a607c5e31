//! Online conformal calibration.
//!
//! The localized threshold `λ_t(x) = g_t(x) + c_t` keeps a scalar offset and
//! an RBF kernel expansion over past queries; it is updated by online kernel
//! gradient descent. The recalibrator used by the OCBO baselines keeps one
//! value per quantile level and is updated with the scalar online rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::PredictiveNormal;
use crate::normal;

/// Smallest effective threshold passed to `Q^{-1}`.
pub const LAMBDA_MIN: f64 = 1e-6;

/// Conformity score `2·Q(|y - μ| / σ̃)`; equals 1 at `y = μ` and decays to 0.
pub fn nc_score(pred: &PredictiveNormal, y: f64) -> f64 {
    2.0 * normal::sf((y - pred.mean).abs() / pred.sd())
}

/// Whether `y` belongs to `{y : s(x, y) >= λ}` for the raw threshold `λ`.
///
/// A threshold `λ <= 0` admits every observation.
pub fn is_covered(pred: &PredictiveNormal, lambda: f64, y: f64) -> bool {
    lambda <= 0.0 || nc_score(pred, y) >= lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    /// Effective threshold after clamping to `[LAMBDA_MIN, 2 - LAMBDA_MIN]`.
    pub threshold: f64,
}

impl PredictionInterval {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lower && y <= self.upper
    }
}

/// Symmetric interval `μ ± Q^{-1}(λ_eff/2)·σ̃` around the predictive mean.
///
/// Thresholds at or above 1 give the degenerate interval `[μ, μ]`.
pub fn interval(pred: &PredictiveNormal, lambda: f64) -> PredictionInterval {
    let threshold = lambda.clamp(LAMBDA_MIN, 2.0 - LAMBDA_MIN);
    let half = normal::inv_sf(threshold / 2.0).max(0.0) * pred.sd();
    PredictionInterval {
        lower: pred.mean - half,
        upper: pred.mean + half,
        threshold,
    }
}

/// RBF localization kernel `κ·exp(-‖x - x'‖²/l²)`; `l = ∞` gives the constant `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocKernelParams {
    pub kappa: f64,
    pub length_scale: f64,
}

impl LocKernelParams {
    pub fn new(kappa: f64, length_scale: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        if !(length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "localization length scale must be positive, got {length_scale}"
            )));
        }
        Ok(Self {
            kappa,
            length_scale,
        })
    }

    /// Scalar online CP: the kernel expansion vanishes.
    pub fn scalar() -> Self {
        Self {
            kappa: 0.0,
            length_scale: f64::INFINITY,
        }
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> f64 {
        if self.kappa == 0.0 {
            return 0.0;
        }
        if self.length_scale.is_infinite() {
            return self.kappa;
        }
        let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
        self.kappa * (-d2 / (self.length_scale * self.length_scale)).exp()
    }

    /// Lipschitz constant of `z ↦ κ·exp(-z²/l²)`: `κ·√2·e^{-1/2}/l`.
    pub fn lipschitz(&self) -> f64 {
        if self.length_scale.is_infinite() {
            0.0
        } else {
            self.kappa * std::f64::consts::SQRT_2 * (-0.5f64).exp() / self.length_scale
        }
    }
}

/// Decaying learning rate `η_t = η₁·t^{-w}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub eta1: f64,
    pub decay: f64,
}

impl StepSchedule {
    pub fn new(eta1: f64, decay: f64) -> Result<Self> {
        if !(eta1 > 0.0 && eta1.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta1 must be positive, got {eta1}")));
        }
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::InvalidParameter(format!(
                "decay exponent must lie in [0, 1], got {decay}"
            )));
        }
        Ok(Self { eta1, decay })
    }

    pub fn rate(&self, t: usize) -> f64 {
        self.eta1 * (t.max(1) as f64).powf(-self.decay)
    }
}

/// Localized threshold function `λ_t(x) = c_t + Σ_τ w_τ·k_g(x_τ, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFunction {
    pub c: f64,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub kernel: LocKernelParams,
    /// Regularization λ of the kernel expansion.
    pub reg: f64,
    pub schedule: StepSchedule,
    /// Number of updates applied so far.
    pub t: usize,
}

impl ThresholdFunction {
    /// Starts at `c₁ = c0` with an empty expansion.
    pub fn new(c0: f64, kernel: LocKernelParams, reg: f64, schedule: StepSchedule) -> Result<Self> {
        if !(reg >= 0.0 && reg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization must be non-negative, got {reg}"
            )));
        }
        Ok(Self {
            c: c0,
            centers: Vec::new(),
            coeffs: Vec::new(),
            kernel,
            reg,
            schedule,
            t: 0,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c
            + self
                .centers
                .iter()
                .zip(&self.coeffs)
                .map(|(xc, w)| w * self.kernel.eval(xc, x))
                .sum::<f64>()
    }

    /// One online kernel gradient step with signed correction `delta`:
    /// `c += η·delta`, existing weights shrink by `1 - reg·η`, and `x` joins
    /// the expansion with weight `η·delta`.
    pub fn step_mut(&mut self, x: &[f64], t: usize, delta: f64) -> Result<()> {
        let eta = self.schedule.rate(t);
        if self.reg > 0.0 && eta >= 1.0 / self.reg {
            return Err(Error::StepTooLarge { eta, reg: self.reg });
        }
        self.c += eta * delta;
        let shrink = 1.0 - self.reg * eta;
        for w in &mut self.coeffs {
            *w *= shrink;
        }
        self.centers.push(x.to_vec());
        self.coeffs.push(eta * delta);
        self.t = t;
        Ok(())
    }

    pub fn snapshot(&self) -> ThresholdSnapshot {
        ThresholdSnapshot {
            c: self.c,
            centers: self.centers.clone(),
            coeffs: self.coeffs.clone(),
            kappa: self.kernel.kappa,
            l: self.kernel.length_scale.is_finite().then_some(self.kernel.length_scale),
            lambda: self.reg,
            eta1: self.schedule.eta1,
            w: self.schedule.decay,
            t: self.t,
        }
    }

    pub fn from_snapshot(s: &ThresholdSnapshot) -> Result<Self> {
        if s.centers.len() != s.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: s.centers.len(),
                got: s.coeffs.len(),
            });
        }
        let kernel = LocKernelParams::new(s.kappa, s.l.unwrap_or(f64::INFINITY))?;
        let mut tf = Self::new(s.c, kernel, s.lambda, StepSchedule::new(s.eta1, s.w)?)?;
        tf.centers = s.centers.clone();
        tf.coeffs = s.coeffs.clone();
        tf.t = s.t;
        Ok(tf)
    }
}

/// Localized CP update after observing whether `y_t` fell inside the interval
/// built from `λ_t(x_t)`: `c ← c + η_t(α - miss)`, weights shrink by
/// `1 - λη_t`, and `x_t` is appended with weight `η_t(α - miss)`.
pub fn locp_update(
    tf: &ThresholdFunction,
    x_t: &[f64],
    covered: bool,
    t: usize,
    alpha: f64,
) -> Result<ThresholdFunction> {
    let miss = if covered { 0.0 } else { 1.0 };
    let mut next = tf.clone();
    next.step_mut(x_t, t, alpha - miss)?;
    Ok(next)
}

/// JSON snapshot of a threshold function; `l = null` encodes an infinite
/// length scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSnapshot {
    pub c: f64,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub kappa: f64,
    pub l: Option<f64>,
    pub lambda: f64,
    pub eta1: f64,
    pub w: f64,
    pub t: usize,
}

/// `M` equally spaced quantile levels on `[0.05, 0.95]`.
pub fn default_levels(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.5];
    }
    (0..m)
        .map(|i| 0.05 + 0.9 * i as f64 / (m - 1) as f64)
        .collect()
}

fn interpolate(levels: &[f64], values: &[f64], alpha: f64) -> f64 {
    let n = levels.len();
    if alpha <= levels[0] {
        return values[0];
    }
    if alpha >= levels[n - 1] {
        return values[n - 1];
    }
    let hi = levels.partition_point(|l| *l < alpha);
    if levels[hi] == alpha {
        return values[hi];
    }
    let lo = hi - 1;
    let w = (alpha - levels[lo]) / (levels[hi] - levels[lo]);
    values[lo] + w * (values[hi] - values[lo])
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("recalibrator needs at least one level".into()));
    }
    if !levels.iter().all(|l| (0.0..=1.0).contains(l)) {
        return Err(Error::InvalidParameter("levels must lie in [0, 1]".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "levels must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Scalar-online-CP recalibrator `R_t(α)` on a grid of quantile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recalibrator {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub schedule: StepSchedule,
    pub t: usize,
}

impl Recalibrator {
    /// Identity recalibrator `R(α_i) = α_i`.
    pub fn new(levels: Vec<f64>, schedule: StepSchedule) -> Result<Self> {
        check_levels(&levels)?;
        Ok(Self {
            values: levels.clone(),
            levels,
            schedule,
            t: 0,
        })
    }

    /// Linear interpolation between grid levels, flat outside the grid.
    pub fn eval(&self, alpha: f64) -> f64 {
        interpolate(&self.levels, &self.values, alpha)
    }
}

/// `R(α_i) ← clamp(R(α_i) - η_t(α_i - miss_i), 0, 1)` for every grid level.
pub fn ocbo_update(rec: &Recalibrator, covered_per_level: &[bool], t: usize) -> Result<Recalibrator> {
    if covered_per_level.len() != rec.levels.len() {
        return Err(Error::DimensionMismatch {
            expected: rec.levels.len(),
            got: covered_per_level.len(),
        });
    }
    let eta = rec.schedule.rate(t);
    let mut next = rec.clone();
    for ((v, level), covered) in next.values.iter_mut().zip(&rec.levels).zip(covered_per_level) {
        let miss = if *covered { 0.0 } else { 1.0 };
        *v = (*v - eta * (level - miss)).clamp(0.0, 1.0);
    }
    next.t = t;
    Ok(next)
}

/// Input-dependent recalibrator: one localized threshold function per level,
/// updated with the recalibrator's sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedRecalibrator {
    pub levels: Vec<f64>,
    pub per_level: Vec<ThresholdFunction>,
}

impl LocalizedRecalibrator {
    pub fn new(
        levels: Vec<f64>,
        kernel: LocKernelParams,
        reg: f64,
        schedule: StepSchedule,
    ) -> Result<Self> {
        check_levels(&levels)?;
        let per_level = levels
            .iter()
            .map(|l| ThresholdFunction::new(*l, kernel, reg, schedule))
            .collect::<Result<_>>()?;
        Ok(Self { levels, per_level })
    }

    pub fn values_at(&self, x: &[f64]) -> Vec<f64> {
        self.per_level
            .iter()
            .map(|tf| tf.eval(x).clamp(0.0, 1.0))
            .collect()
    }

    pub fn eval(&self, alpha: f64, x: &[f64]) -> f64 {
        interpolate(&self.levels, &self.values_at(x), alpha)
    }

    pub fn update(&self, x_t: &[f64], covered_per_level: &[bool], t: usize) -> Result<Self> {
        if covered_per_level.len() != self.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                got: covered_per_level.len(),
            });
        }
        let mut next = self.clone();
        for ((tf, level), covered) in next.per_level.iter_mut().zip(&self.levels).zip(covered_per_level)
        {
            let miss = if *covered { 0.0 } else { 1.0 };
            tf.step_mut(x_t, t, -(level - miss))?;
            tf.c = tf.c.clamp(0.0, 1.0);
        }
        Ok(next)
    }
}

/// Parameters entering the long-run coverage bound `α + β/√T + κ` with
/// `β = 2/η₁ + 4√(ρκD)/(η₁λ) + 2(2κ+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub alpha: f64,
    pub eta1: f64,
    pub reg: f64,
    pub kappa: f64,
    /// Localization length scale; `None` for an infinite length scale.
    pub length_scale: Option<f64>,
    /// Bound `D` on the input norm.
    pub input_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageAudit {
    pub rounds: usize,
    pub miscoverage_rate: f64,
    pub bound: f64,
    pub beta: f64,
    pub rho: f64,
    /// Upper bound `B` of the conformity score.
    pub score_bound: f64,
}

pub fn coverage_bound(params: &AuditParams, rounds: usize) -> (f64, f64, f64) {
    let kernel = LocKernelParams {
        kappa: params.kappa,
        length_scale: params.length_scale.unwrap_or(f64::INFINITY),
    };
    let rho = kernel.lipschitz();
    let localized = if params.kappa == 0.0 || rho == 0.0 {
        0.0
    } else {
        4.0 * (rho * params.kappa * params.input_bound).sqrt() / (params.eta1 * params.reg)
    };
    let beta = 2.0 / params.eta1 + localized + 2.0 * (2.0 * params.kappa + 1.0);
    let bound = params.alpha + beta / (rounds as f64).sqrt() + params.kappa;
    (bound, beta, rho)
}

/// Empirical miscoverage of a sequence of coverage indicators against the
/// deterministic long-run bound.
pub fn coverage_audit(covered: &[bool], params: &AuditParams) -> Result<CoverageAudit> {
    if covered.is_empty() {
        return Err(Error::InvalidParameter("coverage audit needs T >= 1".into()));
    }
    let misses = covered.iter().filter(|c| !**c).count();
    let rounds = covered.len();
    let (bound, beta, rho) = coverage_bound(params, rounds);
    Ok(CoverageAudit {
        rounds,
        miscoverage_rate: misses as f64 / rounds as f64,
        bound,
        beta,
        rho,
        score_bound: 2.0,
    })
}
