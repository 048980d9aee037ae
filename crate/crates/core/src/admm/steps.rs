//! Individual block updates of the ADMM hybrid design.

use crate::error::{Error, Result};
use crate::exec::map_range;
use crate::linalg::{c, cholesky, fro, fro_sq, identity, row_space_basis, CMatrix};

use super::{AdmmParams, AdmmState, Problem};

/// Orthogonal projector onto the null space of a stacked interference channel,
/// stored as an orthonormal basis of its row space.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceProjector {
    row_space: CMatrix,
}

impl NullSpaceProjector {
    pub fn new(h_bar: &CMatrix) -> Self {
        NullSpaceProjector {
            row_space: row_space_basis(h_bar),
        }
    }

    /// Projector that leaves its input untouched.
    pub fn identity(n_tx: usize) -> Self {
        NullSpaceProjector {
            row_space: CMatrix::zeros(n_tx, 0),
        }
    }

    pub fn null_dim(&self) -> usize {
        self.row_space.nrows() - self.row_space.ncols()
    }

    /// `(I - V1 V1^H) a`.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        if self.row_space.ncols() == 0 {
            return a.clone();
        }
        a - &self.row_space * (self.row_space.adjoint() * a)
    }
}

/// Projects the columns of `a` onto the null space of `h_bar` using its SVD.
pub fn project_nullspace(a: &CMatrix, h_bar: &CMatrix) -> CMatrix {
    NullSpaceProjector::new(h_bar).apply(a)
}

/// Same projection through the normal equations,
/// `(I - H^H (H H^H)^{-1} H) a`; needs `h_bar` with full row rank.
pub fn project_nullspace_normal_eq(a: &CMatrix, h_bar: &CMatrix) -> Result<CMatrix> {
    if h_bar.nrows() == 0 {
        return Ok(a.clone());
    }
    let gram = h_bar * h_bar.adjoint();
    let chol = cholesky(gram, "null-space normal equations")?;
    Ok(a - h_bar.adjoint() * chol.solve(&(h_bar * a)))
}

/// Radial projection onto the sphere `||Y||_F^2 = target`.
///
/// A zero input has no nearest point; it maps to the uniform-magnitude matrix
/// on the sphere and the returned flag is set.
pub fn project_power_ball(y: &CMatrix, target: f64) -> (CMatrix, bool) {
    let norm = fro(y);
    if norm == 0.0 || !norm.is_finite() {
        let n = (y.nrows() * y.ncols()).max(1) as f64;
        return (
            CMatrix::from_element(y.nrows(), y.ncols(), c((target / n).sqrt(), 0.0)),
            true,
        );
    }
    (y * c(target.sqrt() / norm, 0.0), false)
}

/// Target of the data-fit terms at subcarrier `k`:
/// `F_opt,k + eta (B_k - W_k) + mu (F_approx,k - Z_k)`.
fn combined_target(state: &AdmmState, problem: &Problem, prm: &AdmmParams, k: usize) -> CMatrix {
    let mut t = problem.f_opt[k].clone();
    if prm.eta != 0.0 {
        t += (&state.b[k] - &state.w[k]) * c(prm.eta, 0.0);
    }
    if prm.mu != 0.0 {
        t += (&state.f_approx[k] - &state.z[k]) * c(prm.mu, 0.0);
    }
    t
}

/// Closed-form minimizer of the augmented Lagrangian over `F_RF`.
pub fn update_frf(state: &AdmmState, problem: &Problem, prm: &AdmmParams) -> Result<CMatrix> {
    let n_rf = state.f_rf.ncols();
    let weight = 1.0 + prm.eta + prm.mu;
    let mut numer = (&state.r - &state.u) * c(prm.rho, 0.0);
    let mut gram = identity(n_rf) * c(prm.rho + prm.ridge, 0.0);
    for (k, f_bb) in state.f_bb.iter().enumerate() {
        numer += combined_target(state, problem, prm, k) * f_bb.adjoint();
        gram += (f_bb * f_bb.adjoint()) * c(weight, 0.0);
    }
    let chol = cholesky(gram, "analog update")?;
    Ok(chol.solve(&numer.adjoint()).adjoint())
}

/// Closed-form minimizer over every `F_BB,k`, given the current `F_RF`.
pub fn update_fbb(state: &AdmmState, problem: &Problem, prm: &AdmmParams) -> Result<Vec<CMatrix>> {
    let f_rf = &state.f_rf;
    let gram = f_rf.adjoint() * f_rf + identity(f_rf.ncols()) * c(prm.ridge, 0.0);
    let chol = cholesky(gram, "digital update")?;
    let scale = c(1.0 / (1.0 + prm.eta + prm.mu), 0.0);
    Ok(map_range(state.f_bb.len(), |k| {
        chol.solve(&(f_rf.adjoint() * combined_target(state, problem, prm, k))) * scale
    }))
}

/// Scaled dual ascent: each dual accumulates its primal residual.
pub fn update_duals(state: &mut AdmmState) {
    state.u += &state.f_rf - &state.r;
    for k in 0..state.f_bb.len() {
        let product = &state.f_rf * &state.f_bb[k];
        state.w[k] += &product - &state.b[k];
        state.z[k] += &product - &state.f_approx[k];
    }
}

/// Scaled-form augmented Lagrangian with the indicator terms dropped.
pub fn augmented_lagrangian(state: &AdmmState, problem: &Problem, prm: &AdmmParams) -> f64 {
    let mut value = prm.rho * (fro_sq(&(&state.f_rf - &state.r + &state.u)) - fro_sq(&state.u));
    for k in 0..state.f_bb.len() {
        let product = &state.f_rf * &state.f_bb[k];
        value += fro_sq(&(&problem.f_opt[k] - &product));
        value += prm.eta * (fro_sq(&(&product - &state.b[k] + &state.w[k])) - fro_sq(&state.w[k]));
        value +=
            prm.mu * (fro_sq(&(&product - &state.f_approx[k] + &state.z[k])) - fro_sq(&state.z[k]));
    }
    value
}

/// Solves `min ||A X - T||` column-wise via `(A^H A + ridge I)^{-1} A^H T`,
/// adding a small ridge if the Gram matrix is singular. The flag reports the fallback.
pub fn least_squares(a: &CMatrix, target: &CMatrix, ridge: f64) -> Result<(CMatrix, bool)> {
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * target;
    match cholesky(&gram + identity(a.ncols()) * c(ridge, 0.0), "least squares") {
        Ok(chol) => Ok((chol.solve(&rhs), false)),
        Err(_) => {
            let scale = gram
                .diagonal()
                .iter()
                .map(|z| z.re)
                .fold(0.0, f64::max)
                .max(1.0);
            let fallback = identity(a.ncols()) * c(ridge.max(1e-10 * scale), 0.0);
            let chol = cholesky(gram + fallback, "least squares").map_err(|_| Error::Singular {
                context: "least squares",
            })?;
            Ok((chol.solve(&rhs), true))
        }
    }
}
