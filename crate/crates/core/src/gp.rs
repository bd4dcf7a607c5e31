//! Gaussian-process surrogate with a Matérn-5/2 kernel.
//!
//! Observations are centered by a constant offset (the sample mean unless
//! given explicitly) so the zero-mean prior applies to the residuals; every
//! prediction is shifted back before it is returned.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const SQRT_5: f64 = 2.236_067_977_499_79;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Diagonal jitter tried, in order, when the plain factorization fails.
pub const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Matérn length scale γ, in input units.
    pub length_scale: f64,
    /// Gaussian observation-noise variance σ².
    pub noise_variance: f64,
    /// Prior variance of f; `k(x, x) = output_scale`.
    #[serde(default = "default_output_scale")]
    pub output_scale: f64,
}

fn default_output_scale() -> f64 {
    1.0
}

impl KernelParams {
    pub fn new(length_scale: f64, noise_variance: f64) -> Result<Self> {
        Self::with_output_scale(length_scale, noise_variance, 1.0)
    }

    pub fn with_output_scale(
        length_scale: f64,
        noise_variance: f64,
        output_scale: f64,
    ) -> Result<Self> {
        let p = Self {
            length_scale,
            noise_variance,
            output_scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length_scale", self.length_scale),
            ("noise_variance", self.noise_variance),
            ("output_scale", self.output_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn to_log(self) -> [f64; 3] {
        [
            self.length_scale.ln(),
            self.noise_variance.ln(),
            self.output_scale.ln(),
        ]
    }

    fn from_log(v: &[f64]) -> Self {
        Self {
            length_scale: v[0].exp(),
            noise_variance: v[1].exp(),
            output_scale: v[2].exp(),
        }
    }
}

#[inline]
fn distance(x: &[f64], x2: &[f64]) -> f64 {
    x.iter()
        .zip(x2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn matern52_unchecked(x: &[f64], x2: &[f64], p: &KernelParams) -> f64 {
    let s = SQRT_5 * distance(x, x2) / p.length_scale;
    p.output_scale * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Matérn-5/2 covariance between two inputs.
pub fn matern52(x: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x2.len(),
        });
    }
    if !x.iter().chain(x2).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("kernel input"));
    }
    params.validate()?;
    Ok(matern52_unchecked(x, x2, params))
}

/// Ordered query/observation pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    observations: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, observations: Vec<f64>) -> Result<Self> {
        if inputs.len() != observations.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: observations.len(),
            });
        }
        let mut data = Self::default();
        for (x, y) in inputs.into_iter().zip(observations) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            if first.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: x.len(),
                });
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset input"));
        }
        if !y.is_finite() {
            return Err(Error::NonFinite("dataset observation"));
        }
        self.inputs.push(x);
        self.observations.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn mean_observation(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.observations.iter().sum::<f64>() / self.len() as f64
        }
    }

    /// Checks that every input lies inside `[lower, upper]` coordinate-wise.
    pub fn check_in_box(&self, lower: &[f64], upper: &[f64]) -> Result<()> {
        for x in &self.inputs {
            let inside = x.len() == lower.len()
                && x.iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
            if !inside {
                return Err(Error::OutOfBox { x: x.clone() });
            }
        }
        Ok(())
    }
}

/// Gaussian marginal `N(mean, variance)`.
///
/// Used both for the posterior over `f(x)` (variance may reach zero) and for
/// the predictive distribution of an observation `y` (variance > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveNormal {
    pub mean: f64,
    pub variance: f64,
}

impl PredictiveNormal {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Posterior of `f(x)` after adding a hypothetical observation `y'` at `x`
/// itself: `f(x) | D_t ∪ {(x, y')} ~ N(a·y' + b, var_plus)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePointConditioning {
    pub a: f64,
    pub b: f64,
    pub var_plus: f64,
    /// Noise variance σ² of the model that produced the coefficients.
    pub noise_variance: f64,
}

impl OnePointConditioning {
    pub fn mean_given(&self, y: f64) -> f64 {
        self.a * y + self.b
    }
}

/// Exact GP posterior conditioned on a dataset. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    data: Dataset,
    offset: f64,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
}

fn kernel_matrix(data: &Dataset, params: &KernelParams) -> DMatrix<f64> {
    let n = data.len();
    let xs = data.inputs();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.output_scale + params.noise_variance;
        for j in 0..i {
            let v = matern52_unchecked(&xs[i], &xs[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factorizes `K + σ²I`, escalating diagonal jitter along [`JITTER_LADDER`].
fn factorize(k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    for &jitter in &JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            log::debug!("factorization needed jitter {jitter:e} (n = {n})");
            return Ok((c, jitter));
        }
    }
    Err(Error::NotPositiveDefinite {
        n,
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

impl GpModel {
    /// Conditions on `data`, centering observations by their mean.
    pub fn new(params: KernelParams, data: Dataset) -> Result<Self> {
        let offset = data.mean_observation();
        Self::with_offset(params, data, offset)
    }

    /// Conditions on `data` with an explicit constant prior mean `offset`.
    pub fn with_offset(params: KernelParams, data: Dataset, offset: f64) -> Result<Self> {
        params.validate()?;
        if !offset.is_finite() {
            return Err(Error::NonFinite("prior offset"));
        }
        if data.is_empty() {
            return Ok(Self {
                params,
                data,
                offset,
                jitter: 0.0,
                chol: None,
                weights: DVector::zeros(0),
            });
        }
        let (chol, jitter) = factorize(kernel_matrix(&data, &params))?;
        let centered =
            DVector::from_iterator(data.len(), data.observations().iter().map(|y| y - offset));
        let weights = chol.solve(&centered);
        Ok(Self {
            params,
            data,
            offset,
            jitter,
            chol: Some(chol),
            weights,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Diagonal jitter that was needed to factorize, zero if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + (σ² + jitter)I`, if the dataset is non-empty.
    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        self.chol.as_ref().map(|c| c.l())
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if let Some(first) = self.data.inputs().first() {
            if first.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: x.len(),
                });
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("query input"));
        }
        Ok(())
    }

    fn cross_covariance(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data
                .inputs()
                .iter()
                .map(|xi| matern52_unchecked(xi, x, &self.params)),
        )
    }

    /// Posterior of the latent `f(x)`; variance clamped at zero.
    pub fn posterior(&self, x: &[f64]) -> Result<PredictiveNormal> {
        self.check_query(x)?;
        let prior = self.params.output_scale;
        let Some(chol) = &self.chol else {
            return Ok(PredictiveNormal::new(self.offset, prior));
        };
        let k = self.cross_covariance(x);
        let mean = self.offset + k.dot(&self.weights);
        let mut v = k;
        chol.l_dirty()
            .solve_lower_triangular_mut(&mut v);
        let variance = (prior - v.norm_squared()).max(0.0);
        Ok(PredictiveNormal::new(mean, variance))
    }

    /// Predictive distribution of a noisy observation at `x`: the posterior
    /// over `f(x)` with σ² added to the variance.
    pub fn predictive_observation(&self, x: &[f64]) -> Result<PredictiveNormal> {
        let post = self.posterior(x)?;
        Ok(PredictiveNormal::new(
            post.mean,
            post.variance + self.params.noise_variance,
        ))
    }

    /// Coefficients of the posterior of `f(x)` after one more observation at `x`.
    ///
    /// With `s² = σ²(x|D_t)`, the hypothetical observation has covariance `s²`
    /// with `f(x)` and variance `s² + σ²`, hence `a = s²/(s²+σ²)`,
    /// `b = (1-a)·μ(x|D_t)` and `var_plus = s²σ²/(s²+σ²)`. These coincide with
    /// the last entry of `k'(x)ᵀ(K'+σ²I)⁻¹` and the remaining entries dotted
    /// with the observations.
    pub fn condition_one_point(&self, x: &[f64]) -> Result<OnePointConditioning> {
        let post = self.posterior(x)?;
        let noise = self.params.noise_variance;
        let a = post.variance / (post.variance + noise);
        Ok(OnePointConditioning {
            a,
            b: (1.0 - a) * post.mean,
            var_plus: post.variance * noise / (post.variance + noise),
            noise_variance: noise,
        })
    }

    /// Log marginal likelihood of the centered observations.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(chol) = &self.chol else {
            return 0.0;
        };
        let n = self.data.len() as f64;
        let centered = DVector::from_iterator(
            self.data.len(),
            self.data.observations().iter().map(|y| y - self.offset),
        );
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * centered.dot(&self.weights) - log_det - 0.5 * n * LN_2PI
    }
}

/// Log marginal likelihood of `data` (centered by its mean) under `params`.
pub fn log_marginal_likelihood(params: &KernelParams, data: &Dataset) -> Result<f64> {
    Ok(GpModel::new(*params, data.clone())?.log_marginal_likelihood())
}

/// Box constraints for hyperparameter fitting, as `(lower, upper)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub length_scale: (f64, f64),
    pub noise_variance: (f64, f64),
    pub output_scale: (f64, f64),
}

impl HyperBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("length_scale", self.length_scale),
            ("noise_variance", self.noise_variance),
            ("output_scale", self.output_scale),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "bounds for {name} must satisfy 0 < lo <= hi < inf, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    fn log_box(&self) -> [(f64, f64); 3] {
        [
            (self.length_scale.0.ln(), self.length_scale.1.ln()),
            (self.noise_variance.0.ln(), self.noise_variance.1.ln()),
            (self.output_scale.0.ln(), self.output_scale.1.ln()),
        ]
    }

    pub fn clamp(&self, p: KernelParams) -> KernelParams {
        KernelParams {
            length_scale: p.length_scale.clamp(self.length_scale.0, self.length_scale.1),
            noise_variance: p
                .noise_variance
                .clamp(self.noise_variance.0, self.noise_variance.1),
            output_scale: p.output_scale.clamp(self.output_scale.0, self.output_scale.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub params: KernelParams,
    pub log_likelihood: f64,
    /// Set when no candidate (including `init`) could be evaluated and `init`
    /// was returned unchanged.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_iters: 120,
        }
    }
}

// Penalty returned for parameter vectors whose kernel matrix cannot be factorized.
const INFEASIBLE: f64 = 1e100;

struct NegLogLikelihood<'a> {
    data: &'a Dataset,
    log_box: [(f64, f64); 3],
}

impl NegLogLikelihood<'_> {
    fn eval(&self, p: &[f64]) -> f64 {
        let mut penalty = 0.0;
        let clamped: Vec<f64> = p
            .iter()
            .zip(&self.log_box)
            .map(|(v, (lo, hi))| {
                let c = v.clamp(*lo, *hi);
                penalty += (v - c) * (v - c);
                c
            })
            .collect();
        match log_marginal_likelihood(&KernelParams::from_log(&clamped), self.data) {
            Ok(l) if l.is_finite() => -l + 1e3 * penalty,
            _ => INFEASIBLE,
        }
    }
}

impl CostFunction for NegLogLikelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p))
    }
}

fn initial_simplex(start: &[f64], log_box: &[(f64, f64); 3]) -> Vec<Vec<f64>> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        let (lo, hi) = log_box[i];
        let step = (0.25 * (hi - lo)).clamp(1e-3, 1.0);
        v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    simplex
}

/// Maximizes the marginal likelihood over `(γ, σ², output_scale)` in log
/// space with multi-start Nelder–Mead inside `bounds`.
///
/// The first start is `init` (clamped into the box); the rest are log-uniform
/// draws from a stream seeded by `seed`. The returned parameters never have
/// lower likelihood than `init`.
pub fn fit_hyperparameters(
    data: &Dataset,
    init: KernelParams,
    bounds: &HyperBounds,
    seed: u64,
    opts: FitOptions,
) -> Result<FitOutcome> {
    if data.is_empty() {
        return Err(Error::InvalidParameter(
            "hyperparameter fitting needs at least one observation".into(),
        ));
    }
    init.validate()?;
    bounds.validate()?;

    let log_box = bounds.log_box();
    let objective = NegLogLikelihood { data, log_box };
    let init_ll = log_marginal_likelihood(&init, data).ok().filter(|l| l.is_finite());

    let mut starts = vec![bounds.clamp(init).to_log().to_vec()];
    let mut rng = rng::stream(seed, &[0x6670_6974]);
    for _ in 0..opts.restarts {
        starts.push(
            log_box
                .iter()
                .map(|(lo, hi)| if hi > lo { rng.random_range(*lo..*hi) } else { *lo })
                .collect(),
        );
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut candidates = vec![(objective.eval(&start), start.clone())];
        let solver = NelderMead::new(initial_simplex(&start, &log_box))
            .with_sd_tolerance(1e-8)
            .map_err(|e| Error::Other(e.to_string()))?;
        let run = Executor::new(
            NegLogLikelihood {
                data,
                log_box,
            },
            solver,
        )
        .configure(|s| s.max_iters(opts.max_iters))
        .run();
        if let Ok(res) = run {
            let state = res.state();
            if let Some(p) = state.get_best_param() {
                candidates.push((state.get_best_cost(), p.clone()));
            }
        }
        for (cost, p) in candidates {
            if cost < INFEASIBLE && best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, p));
            }
        }
    }

    let found = best.and_then(|(_, p)| {
        let clamped: Vec<f64> = p
            .iter()
            .zip(&log_box)
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect();
        let params = KernelParams::from_log(&clamped);
        log_marginal_likelihood(&params, data)
            .ok()
            .filter(|l| l.is_finite())
            .map(|l| (params, l))
    });

    Ok(match (found, init_ll) {
        (Some((params, ll)), Some(init_ll)) if ll >= init_ll => FitOutcome {
            params,
            log_likelihood: ll,
            fallback: false,
        },
        (Some((params, ll)), None) => FitOutcome {
            params,
            log_likelihood: ll,
            fallback: false,
        },
        (_, Some(init_ll)) => FitOutcome {
            params: init,
            log_likelihood: init_ll,
            fallback: false,
        },
        (None, None) => {
            log::warn!("hyperparameter fitting failed for every candidate; keeping initial values");
            FitOutcome {
                params: init,
                log_likelihood: f64::NEG_INFINITY,
                fallback: true,
            }
        }
    })
}
