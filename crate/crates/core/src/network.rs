//! Multicell topology, large-scale fading and spatial correlation.
//!
//! Base stations sit on a hexagonal lattice with neighbor spacing
//! `bs_distance_km`. Users are dropped uniformly inside the hexagon of their
//! serving cell. For the 7-cell cluster the layout is wrapped around: every
//! link distance is the minimum over the 7 translated copies of the cluster.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CoreError, Result};
use crate::linalg::{hermitian_defect, min_eigenvalue, CMatrix, C64};
use crate::rng::{stream_rng, STREAM_CORRELATION, STREAM_SHADOWING, STREAM_TOPOLOGY};

/// Distances below this are clamped before evaluating the pathloss.
pub const MIN_DISTANCE_KM: f64 = 0.035;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub pilot_length: usize,
    pub bs_distance_km: f64,
    /// Linear mW.
    pub max_power_mw: f64,
    /// Linear mW per pilot symbol.
    pub noise_power_mw: f64,
    pub pathloss_a_db: f64,
    pub pathloss_b_db: f64,
    pub shadowing_std_db: f64,
    pub correlation_magnitude: f64,
    pub correlated: bool,
    pub seed: u64,
}

impl Default for NetworkConfig {
    /// 7 wrapped cells, 6 users each, 100 antennas, 23 dBm, -169 dBm/Hz over 20 MHz.
    fn default() -> Self {
        Self {
            num_cells: 7,
            users_per_cell: 6,
            antennas: 100,
            pilot_length: 16,
            bs_distance_km: 0.5,
            max_power_mw: dbm_to_mw(23.0),
            noise_power_mw: noise_power_linear(-169.0, 20e6),
            pathloss_a_db: 128.1,
            pathloss_b_db: 37.6,
            shadowing_std_db: 8.0,
            correlation_magnitude: 0.5,
            correlated: false,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(CoreError::InvalidConfig(msg.to_string()));
        if self.num_cells == 0 || self.users_per_cell == 0 {
            return fail("num_cells and users_per_cell must be at least 1");
        }
        if self.antennas == 0 || self.pilot_length == 0 {
            return fail("antennas and pilot_length must be at least 1");
        }
        if !(self.max_power_mw > 0.0 && self.max_power_mw.is_finite()) {
            return fail("max_power_mw must be positive");
        }
        if !(self.noise_power_mw > 0.0 && self.noise_power_mw.is_finite()) {
            return fail("noise_power_mw must be positive");
        }
        if !(self.bs_distance_km > 0.0) {
            return fail("bs_distance_km must be positive");
        }
        if !(0.0..1.0).contains(&self.correlation_magnitude) {
            return fail("correlation_magnitude must lie in [0, 1)");
        }
        if !(self.shadowing_std_db >= 0.0) {
            return fail("shadowing_std_db must be nonnegative");
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.num_cells * self.users_per_cell
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Total noise power in mW for a power spectral density over a bandwidth.
pub fn noise_power_linear(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_mw(psd_dbm_per_hz + 10.0 * bandwidth_hz.log10())
}

/// `a + b log10(d)` with `d` clamped below at [`MIN_DISTANCE_KM`].
pub fn pathloss_db_with(a: f64, b: f64, distance_km: f64) -> f64 {
    a + b * distance_km.max(MIN_DISTANCE_KM).log10()
}

/// Default `128.1 + 37.6 log10(d)` model.
pub fn pathloss_db(distance_km: f64) -> f64 {
    pathloss_db_with(128.1, 37.6, distance_km)
}

/// Exponential correlation model with `omega = nu e^{j theta}`:
/// entry `(m, n)` is `omega^(m-n)` for `m >= n`, Hermitian above the diagonal.
pub fn exp_correlation(m: usize, nu: f64, theta: f64) -> CMatrix {
    let omega = C64::from_polar(nu, theta);
    CMatrix::from_fn(m, m, |r, c| {
        if r >= c {
            omega.powu((r - c) as u32)
        } else {
            omega.powu((c - r) as u32).conj()
        }
    })
}

pub type Point = [f64; 2];

#[derive(Clone, Debug)]
pub struct NetworkInstance {
    pub config: NetworkConfig,
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// `beta[(i * L + l) * K + k]`: gain from user (l, k) to BS i.
    beta: Vec<f64>,
    /// Same indexing as `beta`; present only for correlated instances.
    cov: Option<Vec<CMatrix>>,
    pub wrap_around: bool,
    pub layout_warning: Option<String>,
}

impl NetworkInstance {
    /// Builds an instance from an explicit gain tensor (and optional correlation
    /// tensor), checking the tensor invariants. Positions are left empty.
    pub fn from_parts(
        config: NetworkConfig,
        beta: Vec<f64>,
        cov: Option<Vec<CMatrix>>,
    ) -> Result<Self> {
        config.validate()?;
        let l = config.num_cells;
        let expected = l * config.num_users();
        if beta.len() != expected {
            return Err(CoreError::Dimension(format!(
                "beta has {} entries, expected {expected}",
                beta.len()
            )));
        }
        if beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(CoreError::InvalidConfig(
                "all beta must be positive and finite".into(),
            ));
        }
        if let Some(cov) = &cov {
            if cov.len() != expected {
                return Err(CoreError::Dimension("covariance tensor size".into()));
            }
            for r in cov {
                check_correlation(r, config.antennas)?;
            }
        }
        Ok(Self {
            config,
            bs_positions: Vec::new(),
            user_positions: Vec::new(),
            beta,
            cov,
            wrap_around: false,
            layout_warning: None,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.config.num_cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.config.users_per_cell
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users()
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas
    }

    pub fn tau(&self) -> usize {
        self.config.pilot_length
    }

    pub fn noise(&self) -> f64 {
        self.config.noise_power_mw
    }

    pub fn p_max(&self) -> f64 {
        self.config.max_power_mw
    }

    /// Flat user index of (cell, user).
    pub fn user_index(&self, cell: usize, user: usize) -> usize {
        cell * self.users_per_cell() + user
    }

    pub fn cell_of(&self, user: usize) -> usize {
        user / self.users_per_cell()
    }

    /// Gain from flat user `u` to BS `bs`.
    pub fn beta(&self, bs: usize, u: usize) -> f64 {
        self.beta[bs * self.num_users() + u]
    }

    /// Gain from user `u` to its own BS.
    pub fn beta_own(&self, u: usize) -> f64 {
        self.beta(self.cell_of(u), u)
    }

    pub fn beta_tensor(&self) -> &[f64] {
        &self.beta
    }

    pub fn is_correlated(&self) -> bool {
        self.cov.is_some()
    }

    /// Spatial correlation of the link from user `u` to BS `bs`.
    pub fn correlation(&self, bs: usize, u: usize) -> Option<&CMatrix> {
        self.cov.as_ref().map(|c| &c[bs * self.num_users() + u])
    }

    /// Copy with every correlation matrix replaced by the identity.
    pub fn with_identity_correlation(&self) -> Self {
        let mut out = self.clone();
        let m = self.antennas();
        out.cov = Some(vec![CMatrix::identity(m, m); self.beta.len()]);
        out
    }

    /// Copy with the correlation tensor dropped.
    pub fn uncorrelated(&self) -> Self {
        let mut out = self.clone();
        out.cov = None;
        out
    }

    /// Copy with a different pilot length.
    pub fn with_pilot_length(&self, tau: usize) -> Self {
        let mut out = self.clone();
        out.config.pilot_length = tau;
        out
    }

    /// Copy with a different antenna count; correlation matrices are regenerated
    /// only when absent (use on uncorrelated instances).
    pub fn with_antennas(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.config.antennas = m;
        if out.cov.is_some() {
            out.cov = Some(vec![CMatrix::identity(m, m); self.beta.len()]);
        }
        out
    }

    pub fn with_noise(&self, noise_mw: f64) -> Self {
        let mut out = self.clone();
        out.config.noise_power_mw = noise_mw;
        out
    }
}

fn check_correlation(r: &CMatrix, m: usize) -> Result<()> {
    if r.nrows() != m || r.ncols() != m {
        return Err(CoreError::Dimension(format!(
            "correlation matrix must be {m}x{m}"
        )));
    }
    if hermitian_defect(r) >= 1e-12 {
        return Err(CoreError::InvalidConfig(
            "correlation matrix is not Hermitian".into(),
        ));
    }
    if r.diagonal()
        .iter()
        .any(|d| (d - C64::new(1.0, 0.0)).norm() > 1e-12)
    {
        return Err(CoreError::InvalidConfig(
            "correlation matrix must have unit diagonal".into(),
        ));
    }
    if min_eigenvalue(r) < -1e-9 {
        return Err(CoreError::InvalidConfig(
            "correlation matrix is not PSD".into(),
        ));
    }
    Ok(())
}

/// First `count` sites of the hexagonal lattice, ordered by ring then angle.
fn hex_sites(count: usize, spacing: f64) -> Vec<Point> {
    let a1 = [spacing, 0.0];
    let a2 = [0.5 * spacing, 0.5 * 3f64.sqrt() * spacing];
    let mut rings = 0i64;
    while 1 + 3 * rings * (rings + 1) < count as i64 {
        rings += 1;
    }
    let mut sites: Vec<(i64, f64, Point)> = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            let s = -q - r;
            let ring = q.abs().max(r.abs()).max(s.abs());
            if ring > rings {
                continue;
            }
            let p = [
                q as f64 * a1[0] + r as f64 * a2[0],
                q as f64 * a1[1] + r as f64 * a2[1],
            ];
            let mut angle = p[1].atan2(p[0]);
            if angle < -1e-12 {
                angle += TAU;
            }
            sites.push((ring, angle, p));
        }
    }
    sites.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    sites.into_iter().take(count).map(|s| s.2).collect()
}

/// Translations of the 7-cell cluster: the origin plus `sqrt(7) d` vectors at
/// 60-degree steps.
fn wrap_offsets(spacing: f64) -> Vec<Point> {
    let base = [2.5 * spacing, 0.5 * 3f64.sqrt() * spacing];
    let mut out = vec![[0.0, 0.0]];
    for k in 0..6 {
        let (s, c) = (k as f64 * PI / 3.0).sin_cos();
        out.push([c * base[0] - s * base[1], s * base[0] + c * base[1]]);
    }
    out
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// True when `p` (relative to the cell center) lies in the hexagon whose edges
/// are the perpendicular bisectors towards the 6 neighbors at distance `spacing`.
fn in_hexagon(p: Point, spacing: f64) -> bool {
    (0..3).all(|k| {
        let (s, c) = (k as f64 * PI / 3.0).sin_cos();
        (p[0] * c + p[1] * s).abs() <= 0.5 * spacing
    })
}

/// Link distance under the active layout.
fn link_distance(bs: Point, user: Point, offsets: &[Point]) -> f64 {
    offsets
        .iter()
        .map(|o| dist(user, [bs[0] + o[0], bs[1] + o[1]]))
        .fold(f64::INFINITY, f64::min)
}

/// Generates a network realization; a pure function of `config`.
pub fn generate(config: &NetworkConfig) -> Result<NetworkInstance> {
    config.validate()?;
    let l_cells = config.num_cells;
    let k_users = config.users_per_cell;
    let spacing = config.bs_distance_km;
    let bs_positions = hex_sites(l_cells, spacing);

    let (offsets, wrap_around, layout_warning) = match l_cells {
        7 => (wrap_offsets(spacing), true, None),
        1 => (vec![[0.0, 0.0]], false, None),
        other => {
            let msg =
                format!("no wrap-around layout for {other} cells; using plain hexagonal layout");
            log::warn!("{msg}");
            (vec![[0.0, 0.0]], false, Some(msg))
        }
    };

    let circumradius = spacing / 3f64.sqrt();
    let mut topo = stream_rng(config.seed, STREAM_TOPOLOGY);
    let mut user_positions = Vec::with_capacity(l_cells * k_users);
    for bs in &bs_positions {
        for _ in 0..k_users {
            let p = loop {
                let x = topo.random_range(-circumradius..circumradius);
                let y = topo.random_range(-circumradius..circumradius);
                if in_hexagon([x, y], spacing) {
                    break [x, y];
                }
            };
            user_positions.push([bs[0] + p[0], bs[1] + p[1]]);
        }
    }

    let n_users = l_cells * k_users;
    let mut shadow_rng = stream_rng(config.seed, STREAM_SHADOWING);
    let shadow = if config.shadowing_std_db > 0.0 {
        Some(Normal::new(0.0, config.shadowing_std_db).expect("finite std"))
    } else {
        None
    };
    let mut beta = Vec::with_capacity(l_cells * n_users);
    for bs in &bs_positions {
        for user in &user_positions {
            let d = link_distance(*bs, *user, &offsets);
            let loss = pathloss_db_with(config.pathloss_a_db, config.pathloss_b_db, d);
            let s = shadow.as_ref().map_or(0.0, |n| n.sample(&mut shadow_rng));
            beta.push(10f64.powf(-(loss + s) / 10.0));
        }
    }

    let cov = if config.correlated {
        let mut corr_rng = stream_rng(config.seed, STREAM_CORRELATION);
        Some(
            (0..beta.len())
                .map(|_| {
                    let theta = corr_rng.random_range(0.0..TAU);
                    exp_correlation(config.antennas, config.correlation_magnitude, theta)
                })
                .collect(),
        )
    } else {
        None
    };

    Ok(NetworkInstance {
        config: config.clone(),
        bs_positions,
        user_positions,
        beta,
        cov,
        wrap_around,
        layout_warning,
    })
}

/// Wrap-aware distance between two BS sites of an instance.
pub fn bs_wrap_distance(instance: &NetworkInstance, a: usize, b: usize) -> f64 {
    let offsets = if instance.wrap_around {
        wrap_offsets(instance.config.bs_distance_km)
    } else {
        vec![[0.0, 0.0]]
    };
    link_distance(instance.bs_positions[a], instance.bs_positions[b], &offsets)
}

/// Wrap-aware distance from user `u` to BS `bs`.
pub fn user_wrap_distance(instance: &NetworkInstance, bs: usize, u: usize) -> f64 {
    let offsets = if instance.wrap_around {
        wrap_offsets(instance.config.bs_distance_km)
    } else {
        vec![[0.0, 0.0]]
    };
    link_distance(
        instance.bs_positions[bs],
        instance.user_positions[u],
        &offsets,
    )
}
