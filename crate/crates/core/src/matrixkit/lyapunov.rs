//! Lyapunov-based stability certificates.
//!
//! `AᵀP + PA = −I` is solved as the n²×n² Kronecker system
//! `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = −vec(I)` with dense LU. The operator is
//! singular exactly when two eigenvalues of `A` sum to zero, which is
//! reported as [`Error::MarginalSpectrum`] rather than "not Hurwitz".

use super::matrix::{Lu, Matrix};
use super::norm::largest_symmetric_eigenvalue;
use super::Tolerances;
use crate::error::{Error, Result};

/// Certified exponential decay `‖e^{At}‖ ≤ c·e^{−lambda·t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEnvelope {
    pub c: f64,
    pub lambda: f64,
}

impl DecayEnvelope {
    pub fn at(&self, t: f64) -> f64 {
        self.c * (-self.lambda * t).exp()
    }
}

/// Solves `AᵀP + PA = −I` and returns the symmetrized `P`.
pub fn lyapunov_solution(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    a.require_square("lyapunov_solution")?;
    let n = a.rows();
    let m = n * n;
    // unknown P[k][l] lives at index k*n + l; equation (i, j) at row i*n + j
    let mut op = Matrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // (AᵀP)_{ij} = Σ_k A_{ki} P_{kj}
                op[(row, k * n + j)] += a[(k, i)];
                // (PA)_{ij} = Σ_k P_{ik} A_{kj}
                op[(row, i * n + k)] += a[(k, j)];
            }
        }
    }
    let lu = Lu::factor(&op)?;
    let scale = op.norm_max().max(f64::MIN_POSITIVE);
    if lu.min_pivot() <= tol.singular_rel_tol * scale {
        return Err(Error::MarginalSpectrum);
    }
    let rhs: Vec<f64> = (0..m)
        .map(|r| if r / n == r % n { -1.0 } else { 0.0 })
        .collect();
    let p = lu.solve(&rhs)?;
    Ok(Matrix::from_fn(n, n, |i, j| {
        0.5 * (p[i * n + j] + p[j * n + i])
    }))
}

/// Cholesky succeeds with every pivot above `pivot_tol`.
fn is_positive_definite(p: &Matrix, pivot_tol: f64) -> bool {
    let n = p.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = p[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= pivot_tol {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let s = p[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / d;
        }
    }
    true
}

pub fn is_hurwitz(a: &Matrix) -> Result<bool> {
    is_hurwitz_with(a, &Tolerances::default())
}

pub fn is_hurwitz_with(a: &Matrix, tol: &Tolerances) -> Result<bool> {
    let p = lyapunov_solution(a, tol)?;
    Ok(is_positive_definite(&p, tol.cholesky_pivot_tol))
}

pub fn hurwitz_envelope(a: &Matrix) -> Result<DecayEnvelope> {
    hurwitz_envelope_with(a, &Tolerances::default())
}

/// `lambda = 1/(2 λmax(P))`, `c = sqrt(λmax(P)/λmin(P))` from the Lyapunov `P`.
pub fn hurwitz_envelope_with(a: &Matrix, tol: &Tolerances) -> Result<DecayEnvelope> {
    let p = match lyapunov_solution(a, tol) {
        Ok(p) => p,
        Err(Error::MarginalSpectrum) => return Err(Error::NotHurwitz),
        Err(e) => return Err(e),
    };
    if !is_positive_definite(&p, tol.cholesky_pivot_tol) {
        return Err(Error::NotHurwitz);
    }
    let lmax = largest_symmetric_eigenvalue(&p, tol)?;
    let p_inv = Lu::factor(&p)?.inverse()?;
    let p_inv = Matrix::from_fn(p.rows(), p.rows(), |i, j| {
        0.5 * (p_inv[(i, j)] + p_inv[(j, i)])
    });
    let lmin = 1.0 / largest_symmetric_eigenvalue(&p_inv, tol)?;
    Ok(DecayEnvelope {
        c: (lmax / lmin).sqrt().max(1.0),
        lambda: 1.0 / (2.0 * lmax),
    })
}

/// `|det(mu·I − A)|`, for eigenvalue spot checks.
pub fn char_poly_residual(a: &Matrix, mu: f64) -> Result<f64> {
    a.require_square("char_poly_residual")?;
    let shifted = &Matrix::identity(a.rows()).scale(mu) - a;
    Ok(Lu::factor(&shifted)?.det().abs())
}
