//! Fully digital block-diagonalization precoder and matched per-user combiners.

use crate::channel::{ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{
    c, fro_sq, numerical_rank, orthonormal_completion, row_space_basis, top_left_singular,
    top_right_singular, CMatrix,
};

/// Anything that yields a full per-subcarrier precoder `n_tx x (N_u N_s)`.
pub trait Precoder {
    fn n_carriers(&self) -> usize;
    fn effective(&self, k: usize) -> CMatrix;
}

/// Per-subcarrier fully digital precoders `F_opt,k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalPrecoder {
    pub f_opt: Vec<CMatrix>,
    pub n_streams: usize,
}

impl DigitalPrecoder {
    /// Column block of user `u` at subcarrier `k`.
    pub fn user_block(&self, k: usize, u: usize) -> CMatrix {
        self.f_opt[k]
            .columns(u * self.n_streams, self.n_streams)
            .into_owned()
    }
}

impl Precoder for DigitalPrecoder {
    fn n_carriers(&self) -> usize {
        self.f_opt.len()
    }

    fn effective(&self, k: usize) -> CMatrix {
        self.f_opt[k].clone()
    }
}

/// Block-diagonalization precoder with equal power per stream.
///
/// Each user's block lies in the null space of every other user's channel and
/// carries the dominant right singular vectors of the projected channel.
pub fn bd_fully_digital_precoder(
    channels: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<DigitalPrecoder> {
    let ns = cfg.n_streams;
    let total = cfg.total_streams();
    let mut f_opt = Vec::with_capacity(channels.n_carriers());
    for (k, hk) in channels.h.iter().enumerate() {
        let mut fk = CMatrix::zeros(cfg.n_tx, total);
        for (u, hu) in hk.iter().enumerate() {
            let row_space = row_space_basis(&channels.stacked_others(k, u));
            let null_dim = cfg.n_tx - row_space.ncols();
            if null_dim < ns {
                return Err(Error::Infeasible(format!(
                    "null space of the other users' channels at subcarrier {k}, user {u} has dimension {null_dim} < N_s = {ns}"
                )));
            }
            // H_u restricted to the null space: H_u (I - V1 V1^H).
            let projected = hu - (hu * &row_space) * row_space.adjoint();
            let (mut v, _) = top_right_singular(&projected, ns);
            v -= &row_space * (row_space.adjoint() * &v);
            for mut col in v.column_iter_mut() {
                let n = col.norm();
                if n > 0.0 {
                    col /= c(n, 0.0);
                }
            }
            fk.columns_mut(u * ns, ns).copy_from(&v);
        }
        let scale = (total as f64 / fro_sq(&fk)).sqrt();
        fk *= c(scale, 0.0);
        f_opt.push(fk);
    }
    Ok(DigitalPrecoder {
        f_opt,
        n_streams: ns,
    })
}

/// Fully digital per-user combiners `w[k][u]` (`n_rx x N_s`, orthonormal columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    pub w: Vec<Vec<CMatrix>>,
    /// `(k, u)` pairs whose effective channel had rank below `N_s`; their
    /// combiners were padded with an orthonormal completion.
    pub rank_deficient: Vec<(usize, usize)>,
}

/// Matched combiner: dominant left singular vectors of `H_{k,u} F_{k,u}`.
pub fn fully_digital_combiner<P: Precoder + ?Sized>(
    channels: &ChannelRealization,
    precoder: &P,
    cfg: &SystemConfig,
) -> Combiner {
    let ns = cfg.n_streams;
    let mut rank_deficient = Vec::new();
    let w = channels
        .h
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let fk = precoder.effective(k);
            hk.iter()
                .enumerate()
                .map(|(u, hu)| {
                    let eff = hu * fk.columns(u * ns, ns);
                    let (vecs, vals) = top_left_singular(&eff, ns);
                    let rank = numerical_rank(&vals).min(vecs.ncols());
                    if rank < ns || vals.first().is_none_or(|&s| s == 0.0) {
                        rank_deficient.push((k, u));
                        let good = if vals.first().is_some_and(|&s| s > 0.0) {
                            vecs.columns(0, rank).into_owned()
                        } else {
                            CMatrix::zeros(cfg.n_rx, 0)
                        };
                        orthonormal_completion(&good, ns)
                    } else {
                        vecs
                    }
                })
                .collect()
        })
        .collect();
    Combiner { w, rank_deficient }
}
