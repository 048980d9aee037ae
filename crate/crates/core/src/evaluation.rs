//! Achievable-rate evaluation under Gaussian signaling and design diagnostics.

use serde::{Deserialize, Serialize};

use crate::baseline::{Combiner, DigitalPrecoder, Precoder};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{c, fro_sq, log2_det_hpd, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub noise_var: f64,
    pub rho_u: f64,
}

impl EvalParams {
    /// `rho_u = 1` and `noise_var = 10^(-snr/10)`.
    pub fn from_snr_db(snr_db: f64) -> Self {
        EvalParams {
            noise_var: 10f64.powf(-snr_db / 10.0),
            rho_u: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Rate of user `u` on subcarrier `k`, `rates[k][u]`, in bits/s/Hz.
    pub rates: Vec<Vec<f64>>,
    pub sum_rate: Vec<f64>,
    /// Subcarrier-averaged sum rate.
    pub mean_sum_rate: f64,
    /// Received interference power `rho_u ||W^H H_u F_others||_F^2`, `[k][u]`.
    pub interference: Vec<Vec<f64>>,
}

fn interferer_product(hu: &CMatrix, fk: &CMatrix, u: usize, ns: usize) -> CMatrix {
    let mut others = fk.clone();
    others.columns_mut(u * ns, ns).fill(c(0.0, 0.0));
    hu * others
}

/// Interference-plus-noise covariance seen by user `u` after combining.
pub fn interference_covariance<P: Precoder + ?Sized>(
    channels: &ChannelRealization,
    precoder: &P,
    combiners: &Combiner,
    eval: &EvalParams,
    k: usize,
    u: usize,
) -> CMatrix {
    let w = &combiners.w[k][u];
    let ns = w.ncols();
    let leak = w.adjoint() * interferer_product(&channels.h[k][u], &precoder.effective(k), u, ns);
    covariance_from(&leak, w, eval)
}

fn covariance_from(leak: &CMatrix, w: &CMatrix, eval: &EvalParams) -> CMatrix {
    let mut r =
        leak * leak.adjoint() * c(eval.rho_u, 0.0) + w.adjoint() * w * c(eval.noise_var, 0.0);
    // Enforce exact Hermitian symmetry.
    r = (&r + r.adjoint()) * c(0.5, 0.0);
    r
}

/// Per-user, per-subcarrier rates `log2 det(I + R^{-1} rho S S^H)`.
pub fn spectral_efficiency<P: Precoder + ?Sized>(
    channels: &ChannelRealization,
    precoder: &P,
    combiners: &Combiner,
    eval: &EvalParams,
) -> Result<EvalRecord> {
    if !(eval.noise_var > 0.0) {
        return Err(Error::config("noise_var", "must be > 0"));
    }
    let mut rates = Vec::with_capacity(channels.n_carriers());
    let mut interference = Vec::with_capacity(channels.n_carriers());
    for (k, hk) in channels.h.iter().enumerate() {
        let fk = precoder.effective(k);
        let mut rk = Vec::with_capacity(hk.len());
        let mut ik = Vec::with_capacity(hk.len());
        for (u, hu) in hk.iter().enumerate() {
            let w = &combiners.w[k][u];
            let ns = w.ncols();
            let signal = w.adjoint() * hu * fk.columns(u * ns, ns);
            let leak = w.adjoint() * interferer_product(hu, &fk, u, ns);
            let r = covariance_from(&leak, w, eval);
            let total = &r + &signal * signal.adjoint() * c(eval.rho_u, 0.0);
            let total = (&total + total.adjoint()) * c(0.5, 0.0);
            let rate = log2_det_hpd(total)? - log2_det_hpd(r)?;
            rk.push(rate.max(0.0));
            ik.push(eval.rho_u * fro_sq(&leak));
        }
        rates.push(rk);
        interference.push(ik);
    }
    let sum_rate: Vec<f64> = rates.iter().map(|rk| rk.iter().sum()).collect();
    let mean_sum_rate = sum_rate.iter().sum::<f64>() / sum_rate.len().max(1) as f64;
    Ok(EvalRecord {
        rates,
        sum_rate,
        mean_sum_rate,
        interference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMetrics {
    /// `sum_k ||F_opt,k - F_k||^2 / sum_k ||F_opt,k||^2`.
    pub approximation: f64,
    /// `||H_bar_{k,u} F_{k,u}||_F^2`, indexed `[k][u]`.
    pub leakage: Vec<Vec<f64>>,
}

impl ResidualMetrics {
    pub fn total_leakage(&self) -> f64 {
        self.leakage.iter().flatten().sum()
    }
}

pub fn residual_metrics<P: Precoder + ?Sized>(
    f_opt: &DigitalPrecoder,
    precoder: &P,
    channels: &ChannelRealization,
) -> ResidualMetrics {
    let ns = f_opt.n_streams;
    let (mut err, mut norm) = (0.0, 0.0);
    let mut leakage = Vec::with_capacity(channels.n_carriers());
    for k in 0..channels.n_carriers() {
        let fk = precoder.effective(k);
        err += fro_sq(&(&f_opt.f_opt[k] - &fk));
        norm += fro_sq(&f_opt.f_opt[k]);
        leakage.push(
            (0..channels.n_users())
                .map(|u| fro_sq(&(channels.stacked_others(k, u) * fk.columns(u * ns, ns))))
                .collect(),
        );
    }
    ResidualMetrics {
        approximation: if norm > 0.0 { err / norm } else { 0.0 },
        leakage,
    }
}
