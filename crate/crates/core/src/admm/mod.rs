//! Iterative hybrid precoder design by ADMM.
//!
//! The fully digital target is approximated by `F_RF F_BB,k` while three
//! auxiliary blocks carry the constraints: `R` (analog feasibility), `B_k`
//! (total power) and `F_approx,k` (zero inter-user leakage). Each iteration
//! runs two closed-form primal updates, three projections and a dual step.

pub mod steps;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{DigitalPrecoder, Precoder};
use crate::channel::{ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::exec::map_range;
use crate::linalg::{fro, fro_sq, numerical_rank, top_left_singular, CMatrix};
use crate::projections::{project, Architecture};

pub use steps::{
    augmented_lagrangian, least_squares, project_nullspace, project_nullspace_normal_eq,
    project_power_ball, update_duals, update_fbb, update_frf, NullSpaceProjector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmParams {
    /// Penalty on `F_RF = R`.
    pub rho: f64,
    /// Penalty on `F_RF F_BB,k = B_k`.
    pub eta: f64,
    /// Penalty on `F_RF F_BB,k = F_approx,k`; zero disables interference nulling.
    pub mu: f64,
    pub max_iters: usize,
    pub ridge: f64,
    pub init: InitMode,
    /// Return the finalized iterate with the smallest penalized objective
    /// (approximation error plus `mu` times the distance to the null space)
    /// instead of the last one.
    pub keep_best: bool,
}

/// Starting point of the analog matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Uniform random phases.
    Random,
    /// Dominant left singular vectors of the stacked fully digital targets,
    /// scaled to unit RMS entries; leftover columns keep random phases.
    #[default]
    Target,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            rho: 0.05,
            eta: 0.05,
            mu: 1.0,
            max_iters: 100,
            ridge: 0.0,
            init: InitMode::Target,
            keep_best: true,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config("admm.rho", "must be finite and > 0"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("admm.eta", "must be finite and >= 0"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config("admm.mu", "must be finite and >= 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("admm.max_iters", "must be at least 1"));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::config("admm.ridge", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Fixed data of one design problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub f_opt: Vec<CMatrix>,
    /// Null-space projectors indexed `[k][u]`.
    pub nullspace: Vec<Vec<NullSpaceProjector>>,
    pub n_streams: usize,
    /// `N_u N_s`, the squared Frobenius norm of every per-carrier precoder.
    pub power: f64,
}

impl Problem {
    /// Builds the problem; with `mu == 0` the null-space block is the identity.
    pub fn new(f_opt: &DigitalPrecoder, channels: &ChannelRealization, prm: &AdmmParams) -> Self {
        let n_tx = f_opt.f_opt[0].nrows();
        let n_users = channels.n_users();
        let nullspace = (0..f_opt.n_carriers())
            .map(|k| {
                (0..n_users)
                    .map(|u| {
                        if prm.mu > 0.0 {
                            NullSpaceProjector::new(&channels.stacked_others(k, u))
                        } else {
                            NullSpaceProjector::identity(n_tx)
                        }
                    })
                    .collect()
            })
            .collect();
        Problem {
            f_opt: f_opt.f_opt.clone(),
            nullspace,
            n_streams: f_opt.n_streams,
            power: f_opt.f_opt[0].ncols() as f64,
        }
    }

    /// Applies the per-user null-space projection to every column block of `a`.
    pub fn project_nullspace(&self, k: usize, a: &CMatrix) -> CMatrix {
        let ns = self.n_streams;
        let mut out = a.clone();
        for (u, proj) in self.nullspace[k].iter().enumerate() {
            let block = a.columns(u * ns, ns).into_owned();
            out.columns_mut(u * ns, ns).copy_from(&proj.apply(&block));
        }
        out
    }
}

/// Primal iterates, auxiliary copies and scaled duals.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub f_rf: CMatrix,
    pub f_bb: Vec<CMatrix>,
    pub r: CMatrix,
    pub b: Vec<CMatrix>,
    pub f_approx: Vec<CMatrix>,
    pub u: CMatrix,
    pub w: Vec<CMatrix>,
    pub z: Vec<CMatrix>,
}

/// Hybrid precoder: one analog matrix shared by all subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    pub f_rf: CMatrix,
    pub f_bb: Vec<CMatrix>,
    pub n_streams: usize,
}

impl Precoder for HybridPrecoder {
    fn n_carriers(&self) -> usize {
        self.f_bb.len()
    }

    fn effective(&self, k: usize) -> CMatrix {
        &self.f_rf * &self.f_bb[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// `sum_k ||F_opt,k - F_RF F_BB,k||_F^2`.
    pub objective: f64,
    /// `||F_RF - R||_F`.
    pub residual_analog: f64,
    /// `sqrt(sum_k ||F_RF F_BB,k - B_k||_F^2)`.
    pub residual_power: f64,
    /// `sqrt(sum_k ||F_RF F_BB,k - F_approx,k||_F^2)`.
    pub residual_nullspace: f64,
}

/// Non-fatal numerical events noticed during a design run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DesignFlags {
    pub ridge_fallback: bool,
    pub zero_power_projection: bool,
}

#[derive(Debug, Clone)]
pub struct HybridDesign {
    pub precoder: HybridPrecoder,
    pub trace: Vec<IterationRecord>,
    pub flags: DesignFlags,
}

/// Unit-modulus or target-aligned start projected into the architecture's
/// set, with the digital part fitted by least squares and duals at zero.
///
/// The random phases are always drawn so both modes consume the stream alike.
pub fn initialize<R: Rng + ?Sized>(
    problem: &Problem,
    arch: &Architecture,
    n_rf: usize,
    prm: &AdmmParams,
    rng: &mut R,
    flags: &mut DesignFlags,
) -> Result<AdmmState> {
    let n_tx = problem.f_opt[0].nrows();
    let phases = CMatrix::from_fn(n_tx, n_rf, |_, _| {
        num_complex::Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
    });
    let mut start = phases;
    if prm.init == InitMode::Target {
        let stacked = CMatrix::from_columns(
            &problem
                .f_opt
                .iter()
                .flat_map(|f| f.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        let (basis, sv) = top_left_singular(&stacked, n_rf);
        let scale = (n_tx as f64).sqrt();
        for j in 0..numerical_rank(&sv) {
            // Singular vectors carry an arbitrary phase; pick the one that puts
            // the most energy on the real axis, which real-valued sets keep.
            let col = basis.column(j);
            let sq: num_complex::Complex64 = col.iter().map(|z| z * z).sum();
            let turn = num_complex::Complex64::from_polar(scale, -0.5 * sq.arg());
            start.set_column(j, &(col * turn));
        }
    }
    let f_rf = project(&start, arch);
    let mut f_bb = Vec::with_capacity(problem.f_opt.len());
    for f_opt in &problem.f_opt {
        let (fit, fell_back) = steps::least_squares(&f_rf, f_opt, prm.ridge)?;
        flags.ridge_fallback |= fell_back;
        f_bb.push(fit);
    }
    let mut b = Vec::with_capacity(f_bb.len());
    let mut f_approx = Vec::with_capacity(f_bb.len());
    for (k, fb) in f_bb.iter().enumerate() {
        let product = &f_rf * fb;
        let (ball, zero) = project_power_ball(&product, problem.power);
        flags.zero_power_projection |= zero;
        b.push(ball);
        f_approx.push(problem.project_nullspace(k, &product));
    }
    let zeros_like = |m: &Vec<CMatrix>| {
        m.iter()
            .map(|x| CMatrix::zeros(x.nrows(), x.ncols()))
            .collect::<Vec<_>>()
    };
    Ok(AdmmState {
        u: CMatrix::zeros(n_tx, n_rf),
        w: zeros_like(&b),
        z: zeros_like(&f_approx),
        r: f_rf.clone(),
        f_rf,
        f_bb,
        b,
        f_approx,
    })
}

/// One full iteration: primal updates, projections, dual ascent.
pub fn iterate(
    state: &mut AdmmState,
    problem: &Problem,
    arch: &Architecture,
    prm: &AdmmParams,
    flags: &mut DesignFlags,
) -> Result<IterationRecord> {
    state.f_rf = update_frf(state, problem, prm)?;
    state.f_bb = update_fbb(state, problem, prm)?;
    state.r = project(&(&state.f_rf + &state.u), arch);

    let products: Vec<CMatrix> = state.f_bb.iter().map(|fb| &state.f_rf * fb).collect();
    let balls = map_range(products.len(), |k| {
        project_power_ball(&(&products[k] + &state.w[k]), problem.power)
    });
    state.b = balls
        .into_iter()
        .map(|(ball, zero)| {
            flags.zero_power_projection |= zero;
            ball
        })
        .collect();
    state.f_approx = map_range(products.len(), |k| {
        problem.project_nullspace(k, &(&products[k] + &state.z[k]))
    });
    update_duals(state);

    let mut record = IterationRecord {
        objective: 0.0,
        residual_analog: fro(&(&state.f_rf - &state.r)),
        residual_power: 0.0,
        residual_nullspace: 0.0,
    };
    for (k, product) in products.iter().enumerate() {
        record.objective += fro_sq(&(&problem.f_opt[k] - product));
        record.residual_power += fro_sq(&(product - &state.b[k]));
        record.residual_nullspace += fro_sq(&(product - &state.f_approx[k]));
    }
    record.residual_power = record.residual_power.sqrt();
    record.residual_nullspace = record.residual_nullspace.sqrt();
    Ok(record)
}

/// Turns the final iterates into a feasible precoder: the analog part is the
/// projected copy `R`, the digital part is the least-squares fit to
/// `F_approx,k`, rescaled to meet the power constraint with equality.
pub fn finalize(
    state: &AdmmState,
    problem: &Problem,
    prm: &AdmmParams,
    flags: &mut DesignFlags,
) -> Result<HybridPrecoder> {
    let f_rf = state.r.clone();
    let mut f_bb = Vec::with_capacity(state.f_approx.len());
    for target in &state.f_approx {
        let (mut fit, fell_back) = steps::least_squares(&f_rf, target, prm.ridge)?;
        flags.ridge_fallback |= fell_back;
        let power = fro_sq(&(&f_rf * &fit));
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Numerical(
                "hybrid product vanished at finalization; power cannot be normalized".into(),
            ));
        }
        fit *= num_complex::Complex64::new((problem.power / power).sqrt(), 0.0);
        f_bb.push(fit);
    }
    Ok(HybridPrecoder {
        f_rf,
        f_bb,
        n_streams: problem.n_streams,
    })
}

/// Penalized design objective of a feasible candidate:
/// `sum_k ||F_opt,k - F_k||^2 + mu sum_{k,u} ||F_k,u - P_null(F_k,u)||^2`.
fn candidate_merit(problem: &Problem, p: &HybridPrecoder, mu: f64) -> f64 {
    (0..problem.f_opt.len())
        .map(|k| {
            let f = p.effective(k);
            let off_null = if mu > 0.0 {
                fro_sq(&(&f - problem.project_nullspace(k, &f)))
            } else {
                0.0
            };
            fro_sq(&(&problem.f_opt[k] - &f)) + mu * off_null
        })
        .sum()
}

/// Runs the full hybrid design for one channel realization.
pub fn design_hybrid<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    f_opt: &DigitalPrecoder,
    channels: &ChannelRealization,
    arch: &Architecture,
    prm: &AdmmParams,
    rng: &mut R,
) -> Result<HybridDesign> {
    prm.validate()?;
    arch.validate(cfg.n_tx, cfg.n_rf_tx)?;
    let problem = Problem::new(f_opt, channels, prm);
    let mut flags = DesignFlags::default();
    let mut state = initialize(&problem, arch, cfg.n_rf_tx, prm, rng, &mut flags)?;
    let mut trace = Vec::with_capacity(prm.max_iters);
    let mut best: Option<(f64, HybridPrecoder)> = None;
    for _ in 0..prm.max_iters {
        trace.push(iterate(&mut state, &problem, arch, prm, &mut flags)?);
        if prm.keep_best {
            // A vanished product at an intermediate iterate is just a bad candidate.
            if let Ok(candidate) = finalize(&state, &problem, prm, &mut flags) {
                let err = candidate_merit(&problem, &candidate, prm.mu);
                if best.as_ref().is_none_or(|(e, _)| err < *e) {
                    best = Some((err, candidate));
                }
            }
        }
    }
    let precoder = match best {
        Some((_, p)) => p,
        None => finalize(&state, &problem, prm, &mut flags)?,
    };
    Ok(HybridDesign {
        precoder,
        trace,
        flags,
    })
}

#[cfg(test)]
mod tests;
