//! Propagation and antenna model.
//!
//! The constants below describe a simplified macro-cell stack: log-distance
//! path loss with separate exponents for ground and aerial links, frozen
//! log-normal shadowing, and a sector antenna whose vertical beam is steered
//! by the tilt. They are stand-ins, not measured values.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RrmError};

pub const N_BS: usize = 9;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    pub carrier_hz: f64,
    pub ref_distance_m: f64,
    pub exponent_gu: f64,
    pub exponent_uav: f64,
    pub shadow_sd_gu_db: f64,
    pub shadow_sd_uav_db: f64,
    pub h_beamwidth_deg: f64,
    pub v_beamwidth_deg: f64,
    pub front_to_back_db: f64,
    pub v_sidelobe_db: f64,
    pub max_gain_dbi: f64,
    pub noise_dbm: f64,
    /// Tilt used when associating users to base stations.
    pub association_tilt_deg: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        Self {
            carrier_hz: 2e9,
            ref_distance_m: 1.0,
            exponent_gu: 3.7,
            exponent_uav: 2.2,
            shadow_sd_gu_db: 8.0,
            shadow_sd_uav_db: 4.0,
            h_beamwidth_deg: 65.0,
            v_beamwidth_deg: 10.0,
            front_to_back_db: 25.0,
            v_sidelobe_db: 20.0,
            max_gain_dbi: 8.0,
            // 10 MHz thermal noise with a 7 dB noise figure.
            noise_dbm: -104.0,
            association_tilt_deg: -10.0,
        }
    }
}

impl RadioConstants {
    /// Free-space loss at the reference distance.
    pub fn pl0_db(&self) -> f64 {
        let c = 299_792_458.0;
        20.0 * (4.0 * std::f64::consts::PI * self.ref_distance_m * self.carrier_hz / c).log10()
    }

    /// Log-distance path loss in dB for a 3D distance.
    pub fn pathloss_db(&self, distance_m: f64, exponent: f64) -> f64 {
        self.pl0_db() + 10.0 * exponent * (distance_m / self.ref_distance_m).log10()
    }

    /// Sector antenna gain in dBi. `azimuth_offset_deg` is the angle between
    /// boresight and the user direction in the horizontal plane; the vertical
    /// pattern peaks where the elevation angle equals the tilt.
    pub fn antenna_gain_db(&self, azimuth_offset_deg: f64, elevation_deg: f64, tilt_deg: f64) -> f64 {
        let phi = wrap_deg(azimuth_offset_deg);
        let a_h = -(12.0 * (phi / self.h_beamwidth_deg).powi(2)).min(self.front_to_back_db);
        let a_v = -(12.0 * ((elevation_deg - tilt_deg) / self.v_beamwidth_deg).powi(2)).min(self.v_sidelobe_db);
        self.max_gain_dbi - (-(a_h + a_v)).min(self.front_to_back_db)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

/// Maps an angle to `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let r = (a + 180.0).rem_euclid(360.0) - 180.0;
    if r == -180.0 {
        180.0
    } else {
        r
    }
}

pub const POWER_RANGE_DBM: (f64, f64) = (6.0, 46.0);
pub const TILT_RANGE_DEG: (f64, f64) = (-90.0, 90.0);

/// Per-base-station transmit powers and tilts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub powers_dbm: Vec<f64>,
    pub tilts_deg: Vec<f64>,
    pub noise_watts: f64,
    /// Weight applied to the UAV rate sum.
    pub lambda_gu: f64,
}

impl RadioConfig {
    pub fn new(powers_dbm: Vec<f64>, tilts_deg: Vec<f64>, noise_watts: f64, lambda_gu: f64) -> Result<Self> {
        for v in [&powers_dbm, &tilts_deg] {
            if v.len() != N_BS {
                return Err(RrmError::DimensionMismatch {
                    expected: N_BS,
                    got: v.len(),
                });
            }
        }
        if !(0.0..=1.0).contains(&lambda_gu) {
            return Err(RrmError::InvalidParameter(format!(
                "lambda_gu must lie in [0, 1], got {lambda_gu}"
            )));
        }
        if !(noise_watts > 0.0) {
            return Err(RrmError::InvalidParameter("noise power must be positive".into()));
        }
        Ok(Self {
            powers_dbm,
            tilts_deg,
            noise_watts,
            lambda_gu,
        })
    }

    /// Decodes `x ∈ [0,1]^18 = [p₁..p₉, θ₁..θ₉]` into physical units.
    pub fn from_normalized(x: &[f64], constants: &RadioConstants, lambda_gu: f64) -> Result<Self> {
        if x.len() != 2 * N_BS {
            return Err(RrmError::DimensionMismatch {
                expected: 2 * N_BS,
                got: x.len(),
            });
        }
        let (p_lo, p_hi) = POWER_RANGE_DBM;
        let (t_lo, t_hi) = TILT_RANGE_DEG;
        let powers = x[..N_BS].iter().map(|u| p_lo + (p_hi - p_lo) * u).collect();
        let tilts = x[N_BS..].iter().map(|u| t_lo + (t_hi - t_lo) * u).collect();
        Self::new(powers, tilts, constants.noise_watts(), lambda_gu)
    }

    pub fn to_normalized(&self) -> Vec<f64> {
        let (p_lo, p_hi) = POWER_RANGE_DBM;
        let (t_lo, t_hi) = TILT_RANGE_DEG;
        self.powers_dbm
            .iter()
            .map(|p| (p - p_lo) / (p_hi - p_lo))
            .chain(self.tilts_deg.iter().map(|t| (t - t_lo) / (t_hi - t_lo)))
            .collect()
    }

    pub fn powers_watts(&self) -> Vec<f64> {
        self.powers_dbm.iter().map(|p| dbm_to_watts(*p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((watts_to_dbm(dbm_to_watts(17.3)) - 17.3).abs() < 1e-12);
    }

    #[test]
    fn doubling_distance_costs_3n_db() {
        let c = RadioConstants::default();
        let d = c.pathloss_db(200.0, 3.7) - c.pathloss_db(100.0, 3.7);
        assert!((d - 37.0 * 2f64.log10()).abs() < 1e-12);
        assert!((c.pl0_db() - 38.46).abs() < 0.01);
    }

    #[test]
    fn antenna_peak_and_monotonicity() {
        let c = RadioConstants::default();
        let peak = c.antenna_gain_db(0.0, -12.0, -12.0);
        assert_eq!(peak, c.max_gain_dbi);
        assert!(c.antenna_gain_db(0.0, -5.0, -12.0) < peak);
        let mut prev = peak;
        for k in 1..=90 {
            let g = c.antenna_gain_db(k as f64, -12.0, -12.0);
            assert!(g <= prev);
            prev = g;
        }
        assert_eq!(c.antenna_gain_db(180.0, 40.0, -12.0), c.max_gain_dbi - c.front_to_back_db);
    }

    #[test]
    fn normalized_round_trip() {
        let c = RadioConstants::default();
        let x: Vec<f64> = (0..18).map(|i| i as f64 / 17.0).collect();
        let cfg = RadioConfig::from_normalized(&x, &c, 0.7).unwrap();
        assert_eq!(cfg.powers_dbm[0], 6.0);
        assert_eq!(cfg.tilts_deg[8], 90.0);
        for (a, b) in cfg.to_normalized().iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(RadioConfig::from_normalized(&x[..17], &c, 0.7).is_err());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(30.0), 30.0);
    }
}
