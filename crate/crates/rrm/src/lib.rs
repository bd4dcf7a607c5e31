//! Downlink radio-resource-management objective for a three-site cellular
//! network serving ground users (GUs) and UAVs.
//!
//! The decision vector holds a transmit power and an antenna tilt for each of
//! the nine sector base stations. The objective is a weighted average of
//! per-user Shannon rates under Rayleigh fading, estimated by Monte Carlo.

pub mod capacity;
pub mod error;
pub mod layout;
pub mod problem;
pub mod radio;

pub use capacity::{capacity_objective, noisy_observe, user_rate, CapacityEstimate};
pub use error::{RrmError, Result};
pub use layout::{LayoutParams, NetworkLayout, UserKind};
pub use problem::{active_bs, embed, extract, RrmProblem, REGISTRY_NAME};
pub use radio::{dbm_to_watts, watts_to_dbm, RadioConfig, RadioConstants};
