//! Network geometry: three cell sites on a triangle, three sectors per site,
//! ground users around each site and UAVs in four rectangles.

use std::f64::consts::PI;

use locbo::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RrmError};
use crate::radio::{db_to_linear, RadioConstants, N_BS};

/// Boresight azimuths of the three sectors at every site, degrees.
pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [30.0, 150.0, 270.0];
/// Angular positions of the sites around the layout center, degrees.
pub const SITE_ANGLES_DEG: [f64; 3] = [90.0, 210.0, 330.0];
/// Seed of the layout shipped with [`NetworkLayout::standard`].
pub const STANDARD_LAYOUT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserKind {
    Gu,
    Uav,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub position: [f64; 3],
    pub azimuth_deg: f64,
    pub site: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: [f64; 3],
    pub kind: UserKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub inter_site_m: f64,
    pub bs_height_m: f64,
    pub gu_height_m: f64,
    pub uav_height_m: f64,
    pub gus_per_site: usize,
    pub gu_min_radius_m: f64,
    pub gu_max_radius_m: f64,
    pub uavs_per_rect: usize,
    pub rect_length_m: f64,
    pub rect_width_m: f64,
    /// Whether shadow fading is drawn; disabled for symmetry checks.
    pub shadowing: bool,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            inter_site_m: 200.0,
            bs_height_m: 25.0,
            gu_height_m: 1.5,
            uav_height_m: 100.0,
            gus_per_site: 12,
            gu_min_radius_m: 20.0,
            gu_max_radius_m: 115.0,
            uavs_per_rect: 7,
            rect_length_m: 60.0,
            rect_width_m: 20.0,
            shadowing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub constants: RadioConstants,
    pub bs: Vec<BaseStation>,
    pub users: Vec<User>,
    /// Frozen shadow fading in dB, indexed `[user][bs]`.
    pub shadow_db: Vec<Vec<f64>>,
    /// Serving base station of every user.
    pub association: Vec<usize>,
}

fn rotate(p: [f64; 3], deg: f64) -> [f64; 3] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

pub fn site_positions(inter_site_m: f64) -> [[f64; 2]; 3] {
    let r = inter_site_m / 3f64.sqrt();
    SITE_ANGLES_DEG.map(|a| {
        let (s, c) = a.to_radians().sin_cos();
        [r * c, r * s]
    })
}

pub fn base_stations(params: &LayoutParams) -> Vec<BaseStation> {
    site_positions(params.inter_site_m)
        .iter()
        .enumerate()
        .flat_map(|(site, p)| {
            SECTOR_AZIMUTHS_DEG.map(|az| BaseStation {
                position: [p[0], p[1], params.bs_height_m],
                azimuth_deg: az,
                site,
            })
        })
        .collect()
}

/// Centers of the UAV rectangles: the layout center and the midpoints of the
/// three inter-site edges.
pub fn uav_rect_centers(inter_site_m: f64) -> [[f64; 2]; 4] {
    let s = site_positions(inter_site_m);
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    [[0.0, 0.0], mid(s[0], s[1]), mid(s[1], s[2]), mid(s[2], s[0])]
}

impl NetworkLayout {
    /// The layout used by the shipped problem.
    pub fn standard() -> Self {
        Self::generate(&LayoutParams::default(), RadioConstants::default(), STANDARD_LAYOUT_SEED)
            .expect("standard layout is valid")
    }

    pub fn generate(params: &LayoutParams, constants: RadioConstants, seed: u64) -> Result<Self> {
        let bs = base_stations(params);
        let mut users = Vec::new();
        let mut rng = stream(seed, &[1]);
        for site in site_positions(params.inter_site_m) {
            for _ in 0..params.gus_per_site {
                // Area-uniform draw in the annulus around the site.
                let (r0, r1) = (params.gu_min_radius_m, params.gu_max_radius_m);
                let u: f64 = rng.random();
                let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
                let th = rng.random_range(0.0..2.0 * PI);
                users.push(User {
                    position: [site[0] + r * th.cos(), site[1] + r * th.sin(), params.gu_height_m],
                    kind: UserKind::Gu,
                });
            }
        }
        for c in uav_rect_centers(params.inter_site_m) {
            let n = params.uavs_per_rect;
            for i in 0..n {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
                users.push(User {
                    position: [c[0] + frac * params.rect_length_m, c[1], params.uav_height_m],
                    kind: UserKind::Uav,
                });
            }
        }
        let mut shadow_rng = stream(seed, &[2]);
        let shadow_db = users
            .iter()
            .map(|u| {
                let sd = match u.kind {
                    UserKind::Gu => constants.shadow_sd_gu_db,
                    UserKind::Uav => constants.shadow_sd_uav_db,
                };
                (0..bs.len())
                    .map(|_| {
                        let z: f64 = shadow_rng.sample(StandardNormal);
                        if params.shadowing {
                            sd * z
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_parts(constants, bs, users, shadow_db)
    }

    /// Assembles a layout and associates every user with its strongest base
    /// station at the association tilt.
    pub fn from_parts(
        constants: RadioConstants,
        bs: Vec<BaseStation>,
        users: Vec<User>,
        shadow_db: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if bs.len() != N_BS {
            return Err(RrmError::DimensionMismatch {
                expected: N_BS,
                got: bs.len(),
            });
        }
        if shadow_db.len() != users.len() || shadow_db.iter().any(|r| r.len() != bs.len()) {
            return Err(RrmError::InvalidParameter("shadow matrix must be users x base stations".into()));
        }
        let mut layout = Self {
            constants,
            bs,
            users,
            shadow_db,
            association: Vec::new(),
        };
        let tilts = [constants.association_tilt_deg; N_BS];
        let gains = layout.gain_matrix(&tilts)?;
        layout.association = gains
            .iter()
            .map(|row| locbo::optimizer::argmax_first(row))
            .collect();
        Ok(layout)
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn count(&self, kind: UserKind) -> usize {
        self.users.iter().filter(|u| u.kind == kind).count()
    }

    /// Linear large-scale gain between base station `b` and user `k`:
    /// path loss, antenna gain and frozen shadowing.
    pub fn large_scale_gain(&self, b: usize, k: usize, tilt_deg: f64) -> Result<f64> {
        let bs = &self.bs[b];
        let u = &self.users[k];
        let d = [
            u.position[0] - bs.position[0],
            u.position[1] - bs.position[1],
            u.position[2] - bs.position[2],
        ];
        let d2 = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let d3 = (d2 * d2 + d[2] * d[2]).sqrt();
        if d3 == 0.0 {
            return Err(RrmError::ZeroDistance { bs: b, user: k });
        }
        let c = &self.constants;
        let exponent = match u.kind {
            UserKind::Gu => c.exponent_gu,
            UserKind::Uav => c.exponent_uav,
        };
        let azimuth = d[1].atan2(d[0]).to_degrees();
        let elevation = d[2].atan2(d2).to_degrees();
        let gain_db = c.antenna_gain_db(azimuth - bs.azimuth_deg, elevation, tilt_deg)
            - c.pathloss_db(d3, exponent)
            + self.shadow_db[k][b];
        Ok(db_to_linear(gain_db))
    }

    /// Gains for all links, indexed `[user][bs]`.
    pub fn gain_matrix(&self, tilts_deg: &[f64]) -> Result<Vec<Vec<f64>>> {
        if tilts_deg.len() != self.bs.len() {
            return Err(RrmError::DimensionMismatch {
                expected: self.bs.len(),
                got: tilts_deg.len(),
            });
        }
        (0..self.users.len())
            .map(|k| {
                (0..self.bs.len())
                    .map(|b| self.large_scale_gain(b, k, tilts_deg[b]))
                    .collect()
            })
            .collect()
    }

    /// Rotates every user by a multiple of 120° about the layout center. The
    /// base-station set maps onto itself; the returned permutation sends base
    /// station `b` to the one occupying its rotated position. Shadowing and
    /// association are carried along.
    pub fn rotate_users(&self, steps: usize) -> Result<(Self, Vec<usize>)> {
        let deg = 120.0 * steps as f64;
        let perm: Vec<usize> = self
            .bs
            .iter()
            .map(|b| {
                let p = rotate(b.position, deg);
                let az = crate::radio::wrap_deg(b.azimuth_deg + deg);
                self.bs
                    .iter()
                    .position(|o| {
                        (o.position[0] - p[0]).abs() < 1e-9
                            && (o.position[1] - p[1]).abs() < 1e-9
                            && crate::radio::wrap_deg(o.azimuth_deg - az).abs() < 1e-9
                    })
                    .ok_or_else(|| RrmError::InvalidParameter("layout is not rotation symmetric".into()))
            })
            .collect::<Result<_>>()?;
        let users = self
            .users
            .iter()
            .map(|u| User {
                position: rotate(u.position, deg),
                kind: u.kind,
            })
            .collect();
        let shadow_db = self
            .shadow_db
            .iter()
            .map(|row| {
                let mut out = vec![0.0; row.len()];
                for (b, v) in row.iter().enumerate() {
                    out[perm[b]] = *v;
                }
                out
            })
            .collect();
        let rotated = Self {
            constants: self.constants,
            bs: self.bs.clone(),
            users,
            shadow_db,
            association: self.association.iter().map(|b| perm[*b]).collect(),
        };
        Ok((rotated, perm))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
