//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn fro_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn fro(m: &CMatrix) -> f64 {
    fro_sq(m).sqrt()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Rank decided by the relative singular-value cutoff.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * max)
        .count()
}

/// Orthonormal basis (as columns) of the row space of `m`, from its SVD.
///
/// The result has `m.ncols()` rows and `rank(m)` columns.
pub fn row_space_basis(m: &CMatrix) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.ncols(), 0);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let rank = numerical_rank(svd.singular_values.as_slice());
    v_t.rows(0, rank).adjoint()
}

/// Dominant `k` right singular vectors of `m`, as columns, with the matching singular values.
pub fn top_right_singular(m: &CMatrix, k: usize) -> (CMatrix, Vec<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let take = k.min(v_t.nrows());
    let vecs = v_t.rows(0, take).adjoint();
    let vals = svd.singular_values.as_slice()[..take].to_vec();
    (vecs, vals)
}

/// Dominant `k` left singular vectors of `m`, as columns, with the matching singular values.
pub fn top_left_singular(m: &CMatrix, k: usize) -> (CMatrix, Vec<f64>) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let take = k.min(u.ncols());
    let vecs = u.columns(0, take).into_owned();
    let vals = svd.singular_values.as_slice()[..take].to_vec();
    (vecs, vals)
}

/// Cholesky factor of a Hermitian positive definite matrix, or `Singular`.
pub fn cholesky(m: CMatrix, context: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    let scale = m.diagonal().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let chol = Cholesky::new(m).ok_or(Error::Singular { context })?;
    // Reject factorizations whose pivots collapsed to round-off.
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > 0.0) || min_pivot * min_pivot < 1e-14 * scale {
        return Err(Error::Singular { context });
    }
    Ok(chol)
}

/// `log det` of a Hermitian positive definite matrix via Cholesky.
pub fn log2_det_hpd(m: CMatrix) -> Result<f64> {
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
    Ok(chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|z| 2.0 * z.re.log2())
        .sum())
}

/// Completes `basis` (orthonormal columns) to `k` orthonormal columns in `C^n`
/// using Gram-Schmidt against the canonical basis.
pub fn orthonormal_completion(basis: &CMatrix, k: usize) -> CMatrix {
    let n = basis.nrows();
    let mut cols: Vec<nalgebra::DVector<Complex64>> =
        basis.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < k && e < n {
        let mut v = nalgebra::DVector::<Complex64>::zeros(n);
        v[e] = c(1.0, 0.0);
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / c(norm, 0.0));
        }
        e += 1;
    }
    CMatrix::from_columns(&cols)
}
