//! Small dense linear-algebra kernels.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used by [`pinv`] and [`rank`] when no
/// explicit tolerance is given.
pub const DEFAULT_RTOL: f64 = 1e-10;

fn is_symmetric(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax();
    let n = m.nrows();
    (0..n).all(|i| (i + 1..n).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

/// Symmetric case: the eigendecomposition is an SVD with `σ = |λ|`.
fn pinv_symmetric(m: &Matrix, rtol: f64) -> Matrix {
    let n = m.nrows();
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let top = eig.eigenvalues.amax();
    let mut out = Matrix::zeros(n, n);
    if top <= 0.0 || !top.is_finite() {
        return out;
    }
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= rtol * top {
            continue;
        }
        let u = eig.eigenvectors.column(k);
        out += (u * u.transpose()) / lam;
    }
    out
}

/// Moore–Penrose pseudoinverse.
///
/// Singular values below `rtol · σ_max` are treated as zero. Symmetric input
/// goes through a symmetric eigendecomposition, which is markedly more
/// accurate than the general SVD on the rank-deficient matrices `C V Cᵀ`.
pub fn pinv_with(m: &Matrix, rtol: f64) -> Matrix {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Matrix::zeros(c, r);
    }
    if is_symmetric(m) {
        return pinv_symmetric(m, rtol);
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => unreachable!("svd requested with u and v_t"),
    };
    let smax = svd.singular_values.max();
    if smax <= 0.0 || !smax.is_finite() {
        return Matrix::zeros(c, r);
    }
    let cutoff = rtol * smax;
    let mut out = Matrix::zeros(c, r);
    for (s_idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let inv = 1.0 / s;
        // out += v_s * u_s^T / s
        let v_col = vt.row(s_idx);
        let u_col = u.column(s_idx);
        for a in 0..c {
            let va = v_col[a] * inv;
            if va == 0.0 {
                continue;
            }
            for b in 0..r {
                out[(a, b)] += va * u_col[b];
            }
        }
    }
    out
}

pub fn pinv(m: &Matrix) -> Matrix {
    pinv_with(m, DEFAULT_RTOL)
}

/// Numerical rank: number of singular values above `rtol · σ_max`.
pub fn rank_with(m: &Matrix, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.max();
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * smax).count()
}

pub fn rank(m: &Matrix) -> usize {
    rank_with(m, DEFAULT_RTOL)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// `vᵀ M v`.
pub fn quadform(v: &[f64], m: &Matrix) -> Result<f64> {
    if m.nrows() != v.len() || m.ncols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "quadratic form of length-{} vector with {}x{} matrix",
            v.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let mut total = 0.0;
    for (a, &va) in v.iter().enumerate() {
        if va == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (b, &vb) in v.iter().enumerate() {
            row += m[(a, b)] * vb;
        }
        total += va * row;
    }
    Ok(total)
}

pub fn trace(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "trace of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.trace())
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "tr(AB) with {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut t = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(t)
}

/// Centering matrix `P_m = I_m - J_m / m`.
pub fn centering(m: usize) -> Matrix {
    Matrix::identity(m, m) - Matrix::from_element(m, m, 1.0 / m as f64)
}
