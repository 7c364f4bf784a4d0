use super::matrix::{vec_norm, Matrix};
use super::Tolerances;
use crate::error::{Error, Result};

/// Largest singular value of `a`, with default tolerances.
pub fn induced_two_norm(a: &Matrix) -> Result<f64> {
    induced_two_norm_with(a, &Tolerances::default())
}

/// Largest singular value by power iteration on the smaller Gram matrix
/// (`AᵀA` or `AAᵀ`), stopping when the Rayleigh quotient settles.
pub fn induced_two_norm_with(a: &Matrix, tol: &Tolerances) -> Result<f64> {
    let gram = if a.cols() <= a.rows() {
        &a.transpose() * a
    } else {
        a * &a.transpose()
    };
    largest_symmetric_eigenvalue(&gram, tol).map(|l| l.max(0.0).sqrt())
}

/// Dominant eigenvalue of a symmetric positive semidefinite matrix.
pub(crate) fn largest_symmetric_eigenvalue(s: &Matrix, tol: &Tolerances) -> Result<f64> {
    let n = s.rows();
    if s.is_zero() {
        return Ok(0.0);
    }
    let mut v = seed_vector(n);
    let mut w = vec![0.0; n];
    let mut last = f64::NAN;
    for it in 0..tol.power_max_iter {
        s.mul_vec_into(&v, &mut w);
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wn = vec_norm(&w);
        if wn == 0.0 {
            // seed landed in the null space; retry from a shifted seed
            v = seed_vector(n)
                .iter()
                .enumerate()
                .map(|(i, x)| x + (i as f64 + 1.0).sin())
                .collect();
            let vn = vec_norm(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            continue;
        }
        if it > 0 && (rq - last).abs() <= tol.power_tol * rq.abs() {
            return Ok(rq);
        }
        last = rq;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    Err(Error::Convergence {
        iterations: tol.power_max_iter,
        last_estimate: last,
    })
}

/// Fixed unit seed built from a low-discrepancy sequence so no coordinate is zero.
fn seed_vector(n: usize) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let v: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i as f64 + 1.0) * PHI).fract())
        .collect();
    let norm = vec_norm(&v);
    v.into_iter().map(|x| x / norm).collect()
}
