//! Clustered wideband geometric channels with planar-array responses, plus an
//! i.i.d. Rayleigh reference channel.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Array, user and carrier dimensions of the downlink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub n_streams: usize,
    pub n_rf_tx: usize,
    #[serde(default = "default_carriers")]
    pub n_carriers: usize,
    #[serde(default = "default_fc")]
    pub f_c: f64,
    #[serde(default)]
    pub bandwidth: f64,
    #[serde(default = "default_unit")]
    pub noise_var: f64,
    #[serde(default = "default_unit")]
    pub rho_u: f64,
}

fn default_carriers() -> usize {
    1
}
fn default_fc() -> f64 {
    28e9
}
fn default_unit() -> f64 {
    1.0
}

pub(crate) fn perfect_square_side(n: usize) -> Option<usize> {
    let side = (n as f64).sqrt().round() as usize;
    (side * side == n && n > 0).then_some(side)
}

impl SystemConfig {
    /// Single-carrier config with default carrier parameters.
    pub fn new(n_tx: usize, n_rx: usize, n_users: usize, n_streams: usize, n_rf_tx: usize) -> Self {
        SystemConfig {
            n_tx,
            n_rx,
            n_users,
            n_streams,
            n_rf_tx,
            n_carriers: 1,
            f_c: default_fc(),
            bandwidth: 0.0,
            noise_var: 1.0,
            rho_u: 1.0,
        }
    }

    pub fn with_carriers(mut self, n_carriers: usize, f_c: f64, bandwidth: f64) -> Self {
        self.n_carriers = n_carriers;
        self.f_c = f_c;
        self.bandwidth = bandwidth;
        self
    }

    /// Total number of streams, `N_u * N_s`.
    pub fn total_streams(&self) -> usize {
        self.n_users * self.n_streams
    }

    pub fn validate(&self) -> Result<()> {
        if perfect_square_side(self.n_tx).is_none() {
            return Err(Error::config(
                "system.n_tx",
                format!(
                    "{} is not a perfect square; the transmit UPA is sqrt(N) x sqrt(N)",
                    self.n_tx
                ),
            ));
        }
        if perfect_square_side(self.n_rx).is_none() {
            return Err(Error::config(
                "system.n_rx",
                format!(
                    "{} is not a perfect square; the receive UPA is sqrt(N) x sqrt(N)",
                    self.n_rx
                ),
            ));
        }
        if self.n_users == 0 {
            return Err(Error::config("system.n_users", "must be at least 1"));
        }
        if self.n_streams == 0 {
            return Err(Error::config("system.n_streams", "must be at least 1"));
        }
        if self.total_streams() > self.n_rf_tx {
            return Err(Error::config(
                "system.n_rf_tx",
                format!(
                    "N_u*N_s = {} exceeds N_RF^tx = {}; the system requires N_u*N_s <= N_RF^tx <= N_tx",
                    self.total_streams(),
                    self.n_rf_tx
                ),
            ));
        }
        if self.n_rf_tx > self.n_tx {
            return Err(Error::config(
                "system.n_rf_tx",
                format!(
                    "N_RF^tx = {} exceeds N_tx = {}; the system requires N_u*N_s <= N_RF^tx <= N_tx",
                    self.n_rf_tx, self.n_tx
                ),
            ));
        }
        if self.n_streams > self.n_rx {
            return Err(Error::config(
                "system.n_streams",
                format!("N_s = {} exceeds N_rx = {}", self.n_streams, self.n_rx),
            ));
        }
        if self.n_carriers == 0 {
            return Err(Error::config("system.n_carriers", "must be at least 1"));
        }
        if !(self.bandwidth >= 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::config("system.bandwidth", "must be finite and >= 0"));
        }
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return Err(Error::config("system.f_c", "must be finite and > 0"));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::config("system.noise_var", "must be > 0"));
        }
        if !(self.rho_u > 0.0) {
            return Err(Error::config("system.rho_u", "must be > 0"));
        }
        Ok(())
    }

    /// Frequency of subcarrier `k` (zero-based), centred on `f_c`.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        let f = self.n_carriers as f64;
        self.f_c + self.bandwidth / f * (k as f64 - (f - 1.0) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    #[default]
    Clustered,
    Uncorrelated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_rays: usize,
    pub angular_spread_deg: f64,
    pub los_enabled: bool,
    /// `E|alpha_LOS|^2` divided by the total NLOS gain variance.
    pub los_power_ratio: f64,
    /// Cluster delays are drawn uniformly from `[0, delay_spread]` seconds.
    pub delay_spread: f64,
    pub beam_split_enabled: bool,
    pub mode: ChannelMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            n_clusters: 6,
            n_rays: 4,
            angular_spread_deg: 10.0,
            los_enabled: false,
            los_power_ratio: 10.0,
            delay_spread: 20e-9,
            beam_split_enabled: false,
            mode: ChannelMode::Clustered,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::config("channel.n_clusters", "must be at least 1"));
        }
        if self.n_rays == 0 {
            return Err(Error::config("channel.n_rays", "must be at least 1"));
        }
        if !(self.angular_spread_deg >= 0.0) {
            return Err(Error::config("channel.angular_spread_deg", "must be >= 0"));
        }
        if !(self.delay_spread >= 0.0) {
            return Err(Error::config("channel.delay_spread", "must be >= 0"));
        }
        if !(self.los_power_ratio >= 0.0) {
            return Err(Error::config("channel.los_power_ratio", "must be >= 0"));
        }
        Ok(())
    }
}

/// Metadata of one propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathInfo {
    pub user: usize,
    pub cluster: usize,
    pub ray: usize,
    pub gain: Complex64,
    pub delay: f64,
    /// Departure (azimuth, elevation) in radians.
    pub aod: (f64, f64),
    /// Arrival (azimuth, elevation) in radians.
    pub aoa: (f64, f64),
    pub is_los: bool,
}

/// Frequency-domain channel matrices `h[k][u]` (each `n_rx x n_tx`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Vec<CMatrix>>,
    pub paths: Vec<PathInfo>,
    pub gamma: f64,
}

impl ChannelRealization {
    pub fn n_carriers(&self) -> usize {
        self.h.len()
    }

    pub fn n_users(&self) -> usize {
        self.h.first().map_or(0, |hk| hk.len())
    }

    /// All users' channels at subcarrier `k` except user `u`, stacked row-wise.
    pub fn stacked_others(&self, k: usize, u: usize) -> CMatrix {
        let hk = &self.h[k];
        let n_tx = hk[0].ncols();
        let n_rx = hk[0].nrows();
        let mut out = CMatrix::zeros((hk.len() - 1) * n_rx, n_tx);
        let mut row = 0;
        for (j, hj) in hk.iter().enumerate() {
            if j == u {
                continue;
            }
            out.rows_mut(row, n_rx).copy_from(hj);
            row += n_rx;
        }
        out
    }
}

/// Planar-array steering vector with half-wavelength spacing.
///
/// Antenna `(p, q)` sits at index `p * side + q` and has phase
/// `pi * freq_ratio * (p sin(theta) sin(phi) + q cos(theta))`.
pub fn upa_response(
    phi: f64,
    theta: f64,
    n_antennas: usize,
    freq_ratio: f64,
) -> Result<DVector<Complex64>> {
    let side = perfect_square_side(n_antennas).ok_or_else(|| {
        Error::config(
            "n_antennas",
            format!("{n_antennas} is not a perfect square; a UPA needs sqrt(N) x sqrt(N) elements"),
        )
    })?;
    if !(freq_ratio > 0.0) {
        return Err(Error::config("freq_ratio", "must be > 0"));
    }
    let scale = 1.0 / (n_antennas as f64).sqrt();
    let u = theta.sin() * phi.sin();
    let v = theta.cos();
    Ok(DVector::from_fn(n_antennas, |idx, _| {
        let p = (idx / side) as f64;
        let q = (idx % side) as f64;
        Complex64::from_polar(scale, PI * freq_ratio * (p * u + q * v))
    }))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(s * re, s * im)
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..2.0 * PI)
}

/// Draws one clustered wideband realization for every user.
pub fn sample_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    prm: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    prm.validate()?;
    if prm.mode != ChannelMode::Clustered {
        return Err(Error::config(
            "channel.mode",
            "sample_channel requires the clustered mode",
        ));
    }
    let spread = Normal::new(0.0, prm.angular_spread_deg.to_radians())
        .map_err(|e| Error::config("channel.angular_spread_deg", e.to_string()))?;
    let ray_var = 1.0 / (prm.n_clusters * prm.n_rays) as f64;
    let los_var = if prm.los_enabled {
        prm.los_power_ratio
    } else {
        0.0
    };
    let gamma = ((cfg.n_tx * cfg.n_rx) as f64 / (1.0 + los_var)).sqrt();

    let mut paths = Vec::new();
    for user in 0..cfg.n_users {
        if prm.los_enabled {
            paths.push(PathInfo {
                user,
                cluster: 0,
                ray: 0,
                gain: complex_gaussian(rng, los_var),
                delay: 0.0,
                aod: (uniform_angle(rng), uniform_angle(rng)),
                aoa: (uniform_angle(rng), uniform_angle(rng)),
                is_los: true,
            });
        }
        for cluster in 0..prm.n_clusters {
            let mean_aod = (uniform_angle(rng), uniform_angle(rng));
            let mean_aoa = (uniform_angle(rng), uniform_angle(rng));
            let delay = if prm.delay_spread > 0.0 {
                rng.random_range(0.0..=prm.delay_spread)
            } else {
                0.0
            };
            for ray in 0..prm.n_rays {
                let aod = (
                    mean_aod.0 + spread.sample(rng),
                    mean_aod.1 + spread.sample(rng),
                );
                let aoa = (
                    mean_aoa.0 + spread.sample(rng),
                    mean_aoa.1 + spread.sample(rng),
                );
                paths.push(PathInfo {
                    user,
                    cluster,
                    ray,
                    gain: complex_gaussian(rng, ray_var),
                    delay,
                    aod,
                    aoa,
                    is_los: false,
                });
            }
        }
    }

    let mut h = Vec::with_capacity(cfg.n_carriers);
    for k in 0..cfg.n_carriers {
        let f_k = cfg.subcarrier_freq(k);
        let ratio = if prm.beam_split_enabled {
            f_k / cfg.f_c
        } else {
            1.0
        };
        let mut hk: Vec<CMatrix> = (0..cfg.n_users)
            .map(|_| CMatrix::zeros(cfg.n_rx, cfg.n_tx))
            .collect();
        for p in &paths {
            let a_r = upa_response(p.aoa.0, p.aoa.1, cfg.n_rx, ratio)?;
            let a_t = upa_response(p.aod.0, p.aod.1, cfg.n_tx, ratio)?;
            let phase = Complex64::from_polar(1.0, -2.0 * PI * p.delay * f_k);
            let coeff = p.gain * phase * gamma;
            hk[p.user].ger(coeff, &a_r, &a_t.conjugate(), c(1.0, 0.0));
        }
        h.push(hk);
    }
    Ok(ChannelRealization { h, paths, gamma })
}

/// Draws i.i.d. unit-variance circular Gaussian entries, independently per subcarrier.
pub fn sample_uncorrelated_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    let h = (0..cfg.n_carriers)
        .map(|_| {
            (0..cfg.n_users)
                .map(|_| CMatrix::from_fn(cfg.n_rx, cfg.n_tx, |_, _| complex_gaussian(rng, 1.0)))
                .collect()
        })
        .collect();
    Ok(ChannelRealization {
        h,
        paths: Vec::new(),
        gamma: 1.0,
    })
}

/// Dispatches on `prm.mode`.
pub fn draw_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    prm: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    match prm.mode {
        ChannelMode::Clustered => sample_channel(cfg, prm, rng),
        ChannelMode::Uncorrelated => sample_uncorrelated_channel(cfg, rng),
    }
}
