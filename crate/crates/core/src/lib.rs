//! Bayesian optimization with Gaussian-process surrogates whose predictive
//! likelihood is recalibrated online by localized conformal prediction.
//!
//! The crate is organised bottom-up:
//!
//! * [`gp`]: Matérn-5/2 Gaussian-process regression, one-point conditioning
//!   coefficients and maximum-likelihood hyperparameter fitting.
//! * [`conformal`]: non-conformity score, threshold functions, prediction
//!   intervals and the online update rules (localized and recalibrator based).
//! * [`calibration`]: the calibrated observation likelihood, the denoised
//!   posterior over `f(x)` and Monte-Carlo expected improvement.
//! * [`problems`]: benchmark objectives and noise models.
//! * [`optimizer`]: the outer optimization loops and trace recording.

pub mod calibration;
pub mod conformal;
pub mod error;
pub mod gp;
pub mod normal;
pub mod optimizer;
pub mod problems;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
