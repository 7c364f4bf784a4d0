//! Matrix exponential by scaling and squaring around a degree-13 Padé core.

use super::matrix::{Lu, Matrix};
use crate::error::Result;

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `e^{A t}`. `t` may be negative.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    a.require_square("mat_exp")?;
    let n = a.rows();
    let at = a.scale(t);
    if n == 1 {
        return Ok(Matrix::scalar(at[(0, 0)].exp()));
    }
    let norm = at.norm_one();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = at.scale(0.5f64.powi(squarings));
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = r.matmul(&r)?;
    }
    Ok(r)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let b = &PADE_13;
    let id = Matrix::identity(n);
    let a2 = a.matmul(a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    let lincomb = |terms: &[(&Matrix, f64)]| {
        let mut out = Matrix::zeros(n, n);
        for (m, c) in terms {
            out = &out + &m.scale(*c);
        }
        out
    };

    let u_inner = lincomb(&[(&a6, b[13]), (&a4, b[11]), (&a2, b[9])]);
    let u_inner =
        &a6.matmul(&u_inner)? + &lincomb(&[(&a6, b[7]), (&a4, b[5]), (&a2, b[3]), (&id, b[1])]);
    let u = a.matmul(&u_inner)?;

    let v_inner = lincomb(&[(&a6, b[12]), (&a4, b[10]), (&a2, b[8])]);
    let v = &a6.matmul(&v_inner)? + &lincomb(&[(&a6, b[6]), (&a4, b[4]), (&a2, b[2]), (&id, b[0])]);

    // (V - U) R = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = Lu::factor(&lhs)?;
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let col = lu.solve(&rhs.col(j))?;
        for i in 0..n {
            r[(i, j)] = col[i];
        }
    }
    Ok(r)
}
