//! Outer optimization loops: LOCBO, vanilla BO, OCBO, OCBO-L and random search.
//!
//! Every stochastic step draws from a stream keyed by `(seed, purpose, index)`,
//! so two methods run with the same seed share initial points, candidate sets,
//! observation noise and Monte-Carlo draws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{
    acquisition_ei, CalibratedLikelihood, DenoisedPosterior, ObservationLikelihood, DEFAULT_N_MC,
};
use crate::conformal::{
    coverage_audit, coverage_bound, default_levels, interval, is_covered, locp_update, ocbo_update,
    AuditParams, CoverageAudit, LocKernelParams, LocalizedRecalibrator, PredictionInterval,
    Recalibrator, StepSchedule, ThresholdFunction, ThresholdSnapshot,
};
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters, Dataset, FitOptions, GpModel, HyperBounds, KernelParams, PredictiveNormal};
use crate::normal;
use crate::problems::{Objective, SearchBox};
use crate::rng::{derive_seed, stream, StreamRng};

const TAG_INIT: u64 = 1;
const TAG_OBS: u64 = 2;
const TAG_CAND: u64 = 3;
const TAG_ACQ: u64 = 4;
const TAG_FIT: u64 = 5;

// Recalibrated probabilities are kept away from 0 and 1 before taking quantiles.
const LEVEL_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "BO")]
    Bo,
    #[serde(rename = "OCBO")]
    Ocbo,
    #[serde(rename = "OCBO-L")]
    OcboL,
    #[serde(rename = "LOCBO")]
    Locbo,
    #[serde(rename = "RS")]
    Rs,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bo, Method::Ocbo, Method::OcboL, Method::Locbo, Method::Rs];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bo => "BO",
            Method::Ocbo => "OCBO",
            Method::OcboL => "OCBO-L",
            Method::Locbo => "LOCBO",
            Method::Rs => "RS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::InvalidParameter(format!(
                    "unknown method '{s}'; known methods: {}",
                    names.join(", ")
                ))
            })
    }
}

/// GP surrogate settings. Unset fields are derived from the search box.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GpSettings {
    #[serde(default)]
    pub init: Option<KernelParams>,
    #[serde(default)]
    pub bounds: Option<HyperBounds>,
    #[serde(default)]
    pub fit: Option<FitOptions>,
}

impl GpSettings {
    pub fn bounds_for(&self, search: &SearchBox) -> HyperBounds {
        self.bounds.unwrap_or_else(|| {
            let w = search.max_width();
            HyperBounds {
                length_scale: (0.01 * w, 2.0 * w),
                noise_variance: (1e-6, 1e2),
                output_scale: (1e-3, 1e3),
            }
        })
    }

    /// Starting point of the first fit.
    pub fn init_for(&self, search: &SearchBox, data: &Dataset) -> KernelParams {
        let bounds = self.bounds_for(search);
        self.init.map(|p| bounds.clamp(p)).unwrap_or_else(|| {
            let ys = data.observations();
            let mean = data.mean_observation();
            let var = if ys.len() > 1 {
                ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64
            } else {
                1.0
            };
            let output = var.max(1e-2);
            bounds.clamp(KernelParams {
                length_scale: 0.2 * search.max_width(),
                noise_variance: 0.1 * output,
                output_scale: output,
            })
        })
    }

    pub fn resolved(&self, search: &SearchBox) -> Self {
        Self {
            init: self.init,
            bounds: Some(self.bounds_for(search)),
            fit: Some(self.fit.unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub method: Method,
    /// Target miscoverage level.
    pub alpha: f64,
    pub eta1: f64,
    /// Learning-rate decay exponent `w`.
    pub decay: f64,
    /// Localization length scale `l`; `None` is `l = ∞`.
    pub length_scale: Option<f64>,
    pub kappa: f64,
    /// Regularization `λ` of the kernel expansion.
    pub reg: f64,
    /// Number of rounds `T` after initialization.
    pub horizon: usize,
    pub n_init: usize,
    pub n_candidates: usize,
    pub n_mc: usize,
    /// Grid size of the OCBO recalibrator.
    pub n_levels: usize,
    pub seed: u64,
    #[serde(default)]
    pub gp: GpSettings,
}

impl BoConfig {
    /// Defaults for the low-dimensional synthetic benchmarks.
    pub fn synthetic(method: Method) -> Self {
        Self {
            method,
            alpha: 0.2,
            eta1: 5e-3,
            decay: 5e-2,
            length_scale: Some(5.0),
            kappa: match method {
                Method::Locbo => 4.0,
                Method::OcboL => 5.0,
                _ => 0.0,
            },
            reg: 4e-3,
            horizon: 50,
            n_init: 5,
            n_candidates: 512,
            n_mc: DEFAULT_N_MC,
            n_levels: 10,
            seed: 0,
            gp: GpSettings::default(),
        }
    }

    /// Defaults for the radio-resource-management problem.
    pub fn rrm(method: Method) -> Self {
        Self {
            method,
            alpha: 0.25,
            eta1: 5e-3,
            decay: 5e-3,
            length_scale: Some(1.0 / 3.0),
            kappa: match method {
                Method::Locbo | Method::OcboL => 2.0,
                _ => 0.0,
            },
            reg: 1e-4,
            horizon: 90,
            n_init: 50,
            n_candidates: 100,
            n_mc: DEFAULT_N_MC,
            n_levels: 10,
            seed: 0,
            gp: GpSettings::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.horizon < 1 {
            return bad("horizon T must be at least 1".into());
        }
        if self.n_init < 1 {
            return bad("n_init must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.n_candidates < 1 || self.n_mc < 1 {
            return bad("n_candidates and n_mc must be at least 1".into());
        }
        if matches!(self.method, Method::Ocbo | Method::OcboL) && self.n_levels < 2 {
            return bad("the recalibrator needs at least 2 levels".into());
        }
        StepSchedule::new(self.eta1, self.decay)?;
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return bad(format!("regularization must be non-negative, got {}", self.reg));
        }
        if self.reg > 0.0 && self.eta1 >= 1.0 / self.reg {
            return Err(Error::StepTooLarge {
                eta: self.eta1,
                reg: self.reg,
            });
        }
        self.loc_kernel()?;
        if let Some(b) = &self.gp.bounds {
            b.validate()?;
        }
        if let Some(p) = &self.gp.init {
            p.validate()?;
        }
        Ok(())
    }

    pub fn loc_kernel(&self) -> Result<LocKernelParams> {
        LocKernelParams::new(self.kappa, self.length_scale.unwrap_or(f64::INFINITY))
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        StepSchedule::new(self.eta1, self.decay)
    }

    /// Parameters of the long-run coverage bound for a search box.
    pub fn audit_params(&self, search: &SearchBox) -> AuditParams {
        AuditParams {
            alpha: self.alpha,
            eta1: self.eta1,
            reg: self.reg,
            kappa: self.kappa,
            length_scale: self.length_scale,
            input_bound: search.diagonal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub x: Vec<f64>,
    pub y: f64,
    /// Noiseless value `f(x)`.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub f: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Threshold `λ_t(x_t)` (LOCBO only).
    pub lambda: Option<f64>,
    /// Whether `y_t` was covered by the round's prediction set.
    pub covered: Option<bool>,
    /// Whether `f(x_t)` was covered by the same set.
    pub f_covered: Option<bool>,
    pub acq: Option<f64>,
    /// Best observation so far, including this round.
    pub incumbent: f64,
    /// `f` at the incumbent query.
    pub incumbent_f: f64,
    pub regret: Option<f64>,
}

/// Final state of the conformal calibrator, if the method has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConformalState {
    Threshold(ThresholdSnapshot),
    Recalibrator(Recalibrator),
    LocalizedRecalibrator {
        levels: Vec<f64>,
        per_level: Vec<ThresholdSnapshot>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub problem: String,
    pub config: BoConfig,
    pub init: Vec<InitRecord>,
    pub rounds: Vec<RoundRecord>,
    /// Query with the largest observation.
    pub x_hat: Vec<f64>,
    pub conformal: Option<ConformalState>,
    pub final_params: Option<KernelParams>,
    pub audit: Option<AuditParams>,
    /// Set when the run stopped early; holds the diagnostic.
    pub aborted: Option<String>,
}

impl Trace {
    pub fn covered_flags(&self) -> Vec<bool> {
        self.rounds.iter().filter_map(|r| r.covered).collect()
    }

    pub fn f_covered_flags(&self) -> Vec<bool> {
        self.rounds.iter().filter_map(|r| r.f_covered).collect()
    }

    /// Audit of the observation coverage flags.
    pub fn coverage_audit(&self) -> Option<CoverageAudit> {
        let params = self.audit.as_ref()?;
        coverage_audit(&self.covered_flags(), params).ok()
    }

    pub fn incumbent_series(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.incumbent).collect()
    }

    /// Best observation before round `t` (1-based).
    fn incumbent_before(&self, idx: usize) -> f64 {
        if idx == 0 {
            self.init.iter().map(|r| r.y).fold(f64::NEG_INFINITY, f64::max)
        } else {
            self.rounds[idx - 1].incumbent
        }
    }
}

/// Uniform candidates in the box; with `anchor = Some((x, coords))` only the
/// listed coordinates vary and the rest are copied from `x`.
pub fn candidates(
    search: &SearchBox,
    anchor: Option<(&[f64], &[usize])>,
    n: usize,
    rng: &mut StreamRng,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| match anchor {
            None => search.sample(rng),
            Some((x, coords)) => {
                let mut c = x.to_vec();
                search.sample_coordinates(&mut c, coords, rng);
                c
            }
        })
        .collect()
}

/// Index of the largest value; the first index wins ties and NaN never wins.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        if *v > best_v {
            best = i;
            best_v = *v;
        }
    }
    best
}

/// Draws `n_candidates` uniform points and returns the acquisition argmax
/// together with its value.
pub fn select_candidate<F>(
    mut acq: F,
    search: &SearchBox,
    n_candidates: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if n_candidates == 0 {
        return Err(Error::InvalidParameter("n_candidates must be at least 1".into()));
    }
    let cands = candidates(search, None, n_candidates, rng);
    let values = cands.iter().map(|c| acq(c)).collect::<Result<Vec<_>>>()?;
    let i = argmax_first(&values);
    Ok((cands[i].clone(), values[i]))
}

enum Calibrator {
    None,
    Threshold(ThresholdFunction),
    Recalibrator(Recalibrator),
    Localized(LocalizedRecalibrator),
}

impl Calibrator {
    fn new(config: &BoConfig) -> Result<Self> {
        Ok(match config.method {
            Method::Bo | Method::Rs => Calibrator::None,
            Method::Locbo => Calibrator::Threshold(ThresholdFunction::new(
                config.alpha,
                config.loc_kernel()?,
                config.reg,
                config.schedule()?,
            )?),
            Method::Ocbo => Calibrator::Recalibrator(Recalibrator::new(
                default_levels(config.n_levels),
                config.schedule()?,
            )?),
            Method::OcboL => Calibrator::Localized(LocalizedRecalibrator::new(
                default_levels(config.n_levels),
                config.loc_kernel()?,
                config.reg,
                config.schedule()?,
            )?),
        })
    }

    fn snapshot(&self) -> Option<ConformalState> {
        match self {
            Calibrator::None => None,
            Calibrator::Threshold(tf) => Some(ConformalState::Threshold(tf.snapshot())),
            Calibrator::Recalibrator(r) => Some(ConformalState::Recalibrator(r.clone())),
            Calibrator::Localized(l) => Some(ConformalState::LocalizedRecalibrator {
                levels: l.levels.clone(),
                per_level: l.per_level.iter().map(|tf| tf.snapshot()).collect(),
            }),
        }
    }

    /// Recalibrated probabilities on the level grid at `x`.
    fn recalibrated(&self, x: &[f64]) -> Option<(&[f64], Vec<f64>)> {
        match self {
            Calibrator::Recalibrator(r) => Some((&r.levels, r.values.clone())),
            Calibrator::Localized(l) => Some((&l.levels, l.values_at(x))),
            _ => None,
        }
    }
}

/// Gaussian matched to a recalibrated quantile function `q(R(p))`, where
/// `R(p)` targets the `1 - p` quantile of the observation.
#[derive(Debug, Clone, Copy)]
struct MatchedGaussian {
    mean: f64,
    sd: f64,
    interval: PredictionInterval,
}

fn interpolate(levels: &[f64], values: &[f64], p: f64) -> f64 {
    if p <= levels[0] {
        return values[0];
    }
    let last = levels.len() - 1;
    if p >= levels[last] {
        return values[last];
    }
    let i = levels.partition_point(|l| *l <= p) - 1;
    let frac = (p - levels[i]) / (levels[i + 1] - levels[i]);
    values[i] + frac * (values[i + 1] - values[i])
}

fn recal_quantile(base: &PredictiveNormal, r: f64) -> f64 {
    base.mean + base.sd() * normal::inv_sf(r.clamp(LEVEL_CLAMP, 1.0 - LEVEL_CLAMP))
}

fn matched_gaussian(base: &PredictiveNormal, levels: &[f64], values: &[f64], alpha: f64) -> MatchedGaussian {
    let q = |p: f64| recal_quantile(base, interpolate(levels, values, p));
    let mean = q(0.5);
    let (a, b) = (q(alpha / 2.0), q(1.0 - alpha / 2.0));
    let half = 0.5 * (a - b).abs();
    let z = normal::inv_sf(alpha / 2.0);
    MatchedGaussian {
        mean,
        sd: if z > 0.0 { half / z } else { 0.0 },
        interval: PredictionInterval {
            lower: a.min(b),
            upper: a.max(b),
            threshold: alpha,
        },
    }
}

struct RoundContext<'a> {
    config: &'a BoConfig,
    model: &'a GpModel,
    calibrator: &'a Calibrator,
    y_best: f64,
    t: usize,
}

impl RoundContext<'_> {
    fn acquisition(&self, x: &[f64], index: usize) -> Result<f64> {
        let cfg = self.config;
        let pred = self.model.predictive_observation(x)?;
        let likelihood = match self.calibrator {
            Calibrator::None => ObservationLikelihood::Gaussian(pred),
            Calibrator::Threshold(tf) => {
                let iv = interval(&pred, tf.eval(x));
                ObservationLikelihood::Calibrated(CalibratedLikelihood::widened(pred, iv, cfg.alpha)?)
            }
            Calibrator::Recalibrator(_) | Calibrator::Localized(_) => {
                let (levels, values) = self.calibrator.recalibrated(x).expect("recalibrator");
                let g = matched_gaussian(&pred, levels, &values, cfg.alpha);
                return Ok(normal::expected_improvement(g.mean, g.sd, self.y_best));
            }
        };
        let cp = DenoisedPosterior::new(self.model.condition_one_point(x)?, likelihood);
        let mut rng = stream(cfg.seed, &[TAG_ACQ, self.t as u64, index as u64]);
        Ok(acquisition_ei(&cp, self.y_best, cfg.n_mc, &mut rng))
    }
}

struct Runner<'a> {
    problem: &'a dyn Objective,
    config: &'a BoConfig,
    data: Dataset,
    init: Vec<InitRecord>,
    rounds: Vec<RoundRecord>,
    calibrator: Calibrator,
    params: Option<KernelParams>,
    best_y: f64,
    best_x: Vec<f64>,
    best_f: f64,
    f_star: Option<f64>,
}

impl<'a> Runner<'a> {
    fn observe(&self, x: &[f64], index: usize) -> Result<(f64, f64)> {
        let mut rng = stream(self.config.seed, &[TAG_OBS, index as u64]);
        let y = self.problem.observe(x, &mut rng)?;
        let f = self.problem.value(x)?;
        Ok((y, f))
    }

    fn record_best(&mut self, x: &[f64], y: f64, f: f64) {
        if y > self.best_y {
            self.best_y = y;
            self.best_x = x.to_vec();
            self.best_f = f;
        }
    }

    fn initialize(&mut self) -> Result<()> {
        let search = self.problem.search_box();
        let mut rng = stream(self.config.seed, &[TAG_INIT]);
        for i in 0..self.config.n_init {
            let x = search.sample(&mut rng);
            let (y, f) = self.observe(&x, i)?;
            self.data.push(x.clone(), y)?;
            self.record_best(&x, y, f);
            self.init.push(InitRecord { x, y, f });
        }
        Ok(())
    }

    fn fit(&mut self, t: usize) -> Result<GpModel> {
        let search = self.problem.search_box();
        let gp = &self.config.gp;
        let bounds = gp.bounds_for(search);
        let init = self.params.unwrap_or_else(|| gp.init_for(search, &self.data));
        let seed = derive_seed(self.config.seed, &[TAG_FIT, t as u64]);
        let outcome = fit_hyperparameters(&self.data, init, &bounds, seed, gp.fit.unwrap_or_default())?;
        self.params = Some(outcome.params);
        GpModel::new(outcome.params, self.data.clone())
    }

    fn round(&mut self, t: usize) -> Result<()> {
        let cfg = self.config;
        let search = self.problem.search_box();
        let active = self.problem.active_coordinates(t);
        let mut cand_rng = stream(cfg.seed, &[TAG_CAND, t as u64]);

        let (x, acq, model) = if cfg.method == Method::Rs {
            (search.sample(&mut cand_rng), None, None)
        } else {
            let model = self.fit(t)?;
            let anchor = active.as_deref().map(|c| (self.best_x.as_slice(), c));
            let cands = candidates(search, anchor, cfg.n_candidates, &mut cand_rng);
            let ctx = RoundContext {
                config: cfg,
                model: &model,
                calibrator: &self.calibrator,
                y_best: self.best_y,
                t,
            };
            let values = cands
                .iter()
                .enumerate()
                .map(|(i, c)| ctx.acquisition(c, i))
                .collect::<Result<Vec<_>>>()?;
            let i = argmax_first(&values);
            (cands[i].clone(), Some(values[i]), Some(model))
        };

        let (y, f) = self.observe(&x, cfg.n_init + t - 1)?;

        let mut lower = None;
        let mut upper = None;
        let mut lambda = None;
        let mut covered = None;
        let mut f_covered = None;
        if let Some(model) = &model {
            let pred = model.predictive_observation(&x)?;
            match &mut self.calibrator {
                Calibrator::None => {
                    let iv = interval(&pred, cfg.alpha);
                    lower = Some(iv.lower);
                    upper = Some(iv.upper);
                    covered = Some(iv.contains(y));
                    f_covered = Some(iv.contains(f));
                }
                Calibrator::Threshold(tf) => {
                    let lam = tf.eval(&x);
                    let iv = interval(&pred, lam);
                    let c = is_covered(&pred, lam, y);
                    lower = Some(iv.lower);
                    upper = Some(iv.upper);
                    lambda = Some(lam);
                    covered = Some(c);
                    f_covered = Some(is_covered(&pred, lam, f));
                    *tf = locp_update(tf, &x, c, t, cfg.alpha)?;
                }
                Calibrator::Recalibrator(_) | Calibrator::Localized(_) => {
                    let (levels, values) = self.calibrator.recalibrated(&x).expect("recalibrator");
                    let levels = levels.to_vec();
                    let g = matched_gaussian(&pred, &levels, &values, cfg.alpha);
                    lower = Some(g.interval.lower);
                    upper = Some(g.interval.upper);
                    covered = Some(g.interval.contains(y));
                    f_covered = Some(g.interval.contains(f));
                    let per_level: Vec<bool> = values
                        .iter()
                        .map(|r| y <= recal_quantile(&pred, *r))
                        .collect();
                    self.calibrator = match &self.calibrator {
                        Calibrator::Recalibrator(r) => Calibrator::Recalibrator(ocbo_update(r, &per_level, t)?),
                        Calibrator::Localized(l) => Calibrator::Localized(l.update(&x, &per_level, t)?),
                        _ => unreachable!(),
                    };
                }
            }
        }

        self.data.push(x.clone(), y)?;
        self.record_best(&x, y, f);
        self.rounds.push(RoundRecord {
            t,
            x,
            y,
            f,
            lower,
            upper,
            lambda,
            covered,
            f_covered,
            acq,
            incumbent: self.best_y,
            incumbent_f: self.best_f,
            regret: self.f_star.map(|fs| (fs - self.best_f).max(0.0)),
        });
        Ok(())
    }
}

/// Runs `config.horizon` rounds after `config.n_init` uniform initial queries.
///
/// Configuration and initialization errors are returned; failures inside the
/// loop stop the run and are reported in [`Trace::aborted`].
pub fn run(problem: &dyn Objective, config: &BoConfig) -> Result<Trace> {
    config.validate()?;
    let dim = problem.search_box().dim();
    let mut runner = Runner {
        problem,
        config,
        data: Dataset::new(Vec::new(), Vec::new())?,
        init: Vec::new(),
        rounds: Vec::new(),
        calibrator: Calibrator::new(config)?,
        params: None,
        best_y: f64::NEG_INFINITY,
        best_x: vec![0.0; dim],
        best_f: f64::NAN,
        f_star: problem.known_max().map(|(_, f)| f),
    };
    runner.initialize()?;
    let mut aborted = None;
    for t in 1..=config.horizon {
        if let Err(e) = runner.round(t) {
            log::warn!("run aborted at round {t}: {e}");
            aborted = Some(format!("round {t}: {e}"));
            break;
        }
    }
    let audit = (config.method == Method::Locbo).then(|| config.audit_params(problem.search_box()));
    Ok(Trace {
        problem: problem.name().to_string(),
        config: config.clone(),
        init: runner.init,
        x_hat: runner.best_x,
        conformal: runner.calibrator.snapshot(),
        final_params: runner.params,
        audit,
        aborted,
        rounds: runner.rounds,
    })
}

/// `f(x*) - f(x_{t*})` per round, with `t*` the argmax of the observations so far.
pub fn simple_regret(problem: &dyn Objective, trace: &Trace) -> Result<Vec<f64>> {
    let (_, f_star) = problem.known_max().ok_or_else(|| {
        Error::UnknownOptimum(format!(
            "problem '{}' has no known maximum; report the objective at the incumbent instead",
            problem.name()
        ))
    })?;
    let mut best_y = f64::NEG_INFINITY;
    let mut best_x: &[f64] = &[];
    for r in &trace.init {
        if r.y > best_y {
            best_y = r.y;
            best_x = &r.x;
        }
    }
    let mut out = Vec::with_capacity(trace.rounds.len());
    for r in &trace.rounds {
        if r.y > best_y {
            best_y = r.y;
            best_x = &r.x;
        }
        out.push(f_star - problem.value(best_x)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityDiagnostic {
    pub rounds: usize,
    /// Fraction of rounds with `u(x_t, f(x_t), D_{t-1}) ≥ 2·a(x_t)/(α·ε)`.
    pub fraction: f64,
    /// `1 - (α + β/√T + κ)/b_ξ`.
    pub floor: f64,
}

/// Empirical counterpart of the utility guarantee for a LOCBO trace.
pub fn utility_guarantee_diagnostic(trace: &Trace, epsilon: f64, b_xi: f64) -> Result<UtilityDiagnostic> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(b_xi > 0.0 && b_xi <= 1.0) {
        return Err(Error::InvalidParameter(format!("b_xi must lie in (0, 1], got {b_xi}")));
    }
    let params = trace.audit.ok_or_else(|| {
        Error::InvalidParameter("utility diagnostic needs a LOCBO trace".into())
    })?;
    let rounds = trace.rounds.len();
    if rounds == 0 {
        return Err(Error::InvalidParameter("trace has no rounds".into()));
    }
    let alpha = trace.config.alpha;
    let hits = trace
        .rounds
        .iter()
        .enumerate()
        .filter(|(i, r)| {
            let u = (r.f - trace.incumbent_before(*i)).max(0.0);
            let a = r.acq.unwrap_or(0.0);
            u >= 2.0 * a / (alpha * epsilon)
        })
        .count();
    let (bound, _, _) = coverage_bound(&params, rounds);
    Ok(UtilityDiagnostic {
        rounds,
        fraction: hits as f64 / rounds as f64,
        floor: 1.0 - bound / b_xi,
    })
}
