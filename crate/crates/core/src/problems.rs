//! Benchmark objectives, noise models and the problem registry.

use std::f64::consts::{E, PI};
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("search box has no dimensions".into()));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "search box bounds must be finite with lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfBox { x: x.to_vec() });
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect()
    }

    /// Overwrites coordinates `coords` of `x` with uniform draws.
    pub fn sample_coordinates<R: Rng + ?Sized>(&self, x: &mut [f64], coords: &[usize], rng: &mut R) {
        for &i in coords {
            x[i] = rng.random_range(self.lower[i]..self.upper[i]);
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest Euclidean norm of a point in the box.
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    HomoscedasticGaussian,
    HeteroscedasticGaussian,
}

/// Additive zero-mean observation noise.
#[derive(Clone, Copy)]
pub enum NoiseModel {
    None,
    Homoscedastic(f64),
    Heteroscedastic(fn(&[f64]) -> f64),
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "None"),
            Self::Homoscedastic(v) => write!(f, "Homoscedastic({v})"),
            Self::Heteroscedastic(_) => write!(f, "Heteroscedastic(..)"),
        }
    }
}

impl NoiseModel {
    pub fn kind(&self) -> NoiseKind {
        match self {
            Self::None => NoiseKind::None,
            Self::Homoscedastic(_) => NoiseKind::HomoscedasticGaussian,
            Self::Heteroscedastic(_) => NoiseKind::HeteroscedasticGaussian,
        }
    }

    pub fn variance(&self, x: &[f64]) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Homoscedastic(v) => *v,
            Self::Heteroscedastic(f) => f(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        match self {
            Self::None => 0.0,
            _ => {
                let z: f64 = rng.sample(StandardNormal);
                self.variance(x).sqrt() * z
            }
        }
    }

    /// `min(P[ξ > 0], P[ξ < 0])` lower-bounded over inputs; 1/2 for any
    /// centred Gaussian. For noiseless problems observations equal `f`, so
    /// the f-coverage bound needs no correction and 1 is returned.
    pub fn b_xi(&self) -> f64 {
        match self {
            Self::None => 1.0,
            _ => 0.5,
        }
    }
}

/// A black-box objective to be maximized.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn search_box(&self) -> &SearchBox;
    /// Noiseless objective value.
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// Noisy observation `f(x) + ξ(x)`.
    fn observe(&self, x: &[f64], rng: &mut StreamRng) -> Result<f64>;
    /// Global maximizer and maximum when known.
    fn known_max(&self) -> Option<(Vec<f64>, f64)>;
    /// Noise-symmetry constant of the observation noise, when known.
    fn b_xi(&self) -> Option<f64>;
    /// Coordinates searched at a given round; `None` means all of them.
    fn active_coordinates(&self, _round: usize) -> Option<Vec<usize>> {
        None
    }
    /// Whether observations are exact.
    fn noiseless(&self) -> bool {
        false
    }
}

/// A closed-form objective with a pluggable noise model.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub bounds: SearchBox,
    pub f: fn(&[f64]) -> f64,
    pub noise: NoiseModel,
    pub known_max: Option<(Vec<f64>, f64)>,
}

impl Problem {
    pub fn ackley(noise: NoiseModel, name: &str) -> Self {
        Self {
            name: name.to_string(),
            bounds: SearchBox::cube(2, -10.0, 10.0).expect("static box"),
            f: |x| ackley2d_unchecked(x[0], x[1]),
            noise,
            known_max: Some((vec![0.0, 0.0], 0.0)),
        }
    }

    pub fn synthetic1d(noise: NoiseModel, name: &str) -> Self {
        Self {
            name: name.to_string(),
            bounds: SearchBox::cube(1, -5.0, 5.0).expect("static box"),
            f: |x| synthetic1d_unchecked(x[0]),
            noise,
            known_max: Some((vec![SYNTHETIC1D_ARGMAX], SYNTHETIC1D_MAX)),
        }
    }
}

impl Objective for Problem {
    fn name(&self) -> &str {
        &self.name
    }

    fn search_box(&self) -> &SearchBox {
        &self.bounds
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.bounds.check(x)?;
        Ok((self.f)(x))
    }

    fn observe(&self, x: &[f64], rng: &mut StreamRng) -> Result<f64> {
        let fx = self.value(x)?;
        Ok(fx + self.noise.sample(x, rng))
    }

    fn known_max(&self) -> Option<(Vec<f64>, f64)> {
        self.known_max.clone()
    }

    fn b_xi(&self) -> Option<f64> {
        Some(self.noise.b_xi())
    }

    fn noiseless(&self) -> bool {
        matches!(self.noise, NoiseModel::None)
    }
}

const ACKLEY_A: f64 = 20.0;
const ACKLEY_B: f64 = 0.2;
const ACKLEY_C: f64 = 2.0 * PI;

// Located by a 10⁶-point grid over [-5, 5] followed by golden-section
// refinement; the function is even, so -x* is an equal maximizer.
pub const SYNTHETIC1D_ARGMAX: f64 = 3.993_348_520_886_585_5;
pub const SYNTHETIC1D_MAX: f64 = 4.958_013_609_943_399;

fn ackley2d_unchecked(x1: f64, x2: f64) -> f64 {
    let r = (0.5 * (x1 * x1 + x2 * x2)).sqrt();
    let c = 0.5 * ((ACKLEY_C * x1).cos() + (ACKLEY_C * x2).cos());
    (ACKLEY_A * (-ACKLEY_B * r).exp() - ACKLEY_A) + (c.exp() - E)
}

fn synthetic1d_unchecked(x: f64) -> f64 {
    x * (2.0 * x).sin() + (PI * x).cos()
}

/// Negated Ackley function on `[-10, 10]²`; maximum 0 at the origin.
pub fn ackley2d(x: &[f64]) -> Result<f64> {
    SearchBox::cube(2, -10.0, 10.0)?.check(x)?;
    Ok(ackley2d_unchecked(x[0], x[1]))
}

/// `x·sin(2x) + cos(πx)` on `[-5, 5]`.
pub fn synthetic1d(x: f64) -> Result<f64> {
    if !(-5.0..=5.0).contains(&x) {
        return Err(Error::OutOfBox { x: vec![x] });
    }
    Ok(synthetic1d_unchecked(x))
}

/// `(‖x‖ + 10)/20`.
pub fn hetero_noise_ackley(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>().sqrt() + 10.0) / 20.0
}

/// `(|x| + 1)/10`.
pub fn hetero_noise_1d(x: &[f64]) -> f64 {
    (x[0].abs() + 1.0) / 10.0
}

/// Names accepted by [`problem`].
pub const REGISTRY: &[&str] = &["ackley2d", "ackley2d-hetero", "synthetic1d", "synthetic1d-hetero"];

pub fn problem(name: &str) -> Result<Problem> {
    match name {
        "ackley2d" => Ok(Problem::ackley(NoiseModel::None, name)),
        "ackley2d-hetero" => Ok(Problem::ackley(NoiseModel::Heteroscedastic(hetero_noise_ackley), name)),
        "synthetic1d" => Ok(Problem::synthetic1d(NoiseModel::None, name)),
        "synthetic1d-hetero" => Ok(Problem::synthetic1d(NoiseModel::Heteroscedastic(hetero_noise_1d), name)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown problem '{name}'; known problems: {}",
            REGISTRY.join(", ")
        ))),
    }
}

/// Empirical `min(P[ξ > 0], P[ξ < 0])` at `x` from `n` noise draws.
pub fn empirical_b_xi(noise: &NoiseModel, x: &[f64], n: usize, rng: &mut StreamRng) -> f64 {
    let positive = (0..n).filter(|_| noise.sample(x, rng) > 0.0).count();
    let p = positive as f64 / n as f64;
    p.min(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn ackley_values() {
        assert_eq!(ackley2d(&[0.0, 0.0]).unwrap(), 0.0);
        let expect = 20.0 * ((-0.2f64).exp() - 1.0);
        assert!((ackley2d(&[1.0, 1.0]).unwrap() - expect).abs() < 1e-12);
        assert!(ackley2d(&[10.5, 0.0]).is_err());
    }

    #[test]
    fn ackley_symmetry() {
        let mut rng = stream(3, &[]);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-10.0..10.0);
            let b: f64 = rng.random_range(-10.0..10.0);
            let v = ackley2d(&[a, b]).unwrap();
            assert!((v - ackley2d(&[b, a]).unwrap()).abs() < 1e-12);
            assert!((v - ackley2d(&[-a, b]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_values() {
        assert_eq!(synthetic1d(0.0).unwrap(), 1.0);
        let x = PI / 4.0;
        assert!((synthetic1d(x).unwrap() - (x + (PI * PI / 4.0).cos())).abs() < 1e-14);
        assert!(synthetic1d(5.1).is_err());
    }

    #[test]
    fn noise_variances() {
        assert_eq!(hetero_noise_ackley(&[0.0, 0.0]), 0.5);
        assert_eq!(hetero_noise_ackley(&[10.0, 0.0]), 1.0);
        assert!((hetero_noise_1d(&[0.0]) - 0.1).abs() < 1e-15);
        assert!((hetero_noise_1d(&[5.0]) - 0.6).abs() < 1e-15);
        assert_eq!(hetero_noise_1d(&[-3.0]), hetero_noise_1d(&[3.0]));
    }

    #[test]
    fn noiseless_observe_is_exact() {
        let p = problem("ackley2d").unwrap();
        let mut rng = stream(1, &[]);
        assert_eq!(p.observe(&[1.0, 2.0], &mut rng).unwrap(), p.value(&[1.0, 2.0]).unwrap());
    }

    #[test]
    fn unknown_name_lists_registry() {
        let msg = problem("nope").unwrap_err().to_string();
        assert!(msg.contains("ackley2d-hetero") && msg.contains("synthetic1d-hetero"));
    }

    #[test]
    fn box_helpers() {
        let b = SearchBox::new(vec![-1.0, 0.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(b.diagonal(), 5.0);
        assert!((b.max_norm() - (4.0f64 + 16.0).sqrt()).abs() < 1e-15);
        assert!(SearchBox::new(vec![1.0], vec![1.0]).is_err());
    }
}
