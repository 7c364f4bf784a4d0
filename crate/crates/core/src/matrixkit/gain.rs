//! Linear iSISS gain `‖G‖ + ∫₀^∞ ‖F e^{Fs} G‖ ds` of `ż = Fz + Gv`.

use super::expm::mat_exp;
use super::lyapunov::hurwitz_envelope_with;
use super::matrix::Matrix;
use super::norm::induced_two_norm_with;
use super::Tolerances;
use crate::error::{Error, Result};

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainEstimate {
    pub gamma: f64,
    /// Truncation horizon of the improper integral.
    pub horizon: f64,
    /// Panel count of the accepted refinement.
    pub panels: usize,
    /// Relative change between the last two refinements.
    pub rel_change: f64,
}

pub fn isiss_gain(f: &Matrix, g: &Matrix) -> Result<f64> {
    isiss_gain_detailed(f, g, &Tolerances::default()).map(|e| e.gamma)
}

pub fn isiss_gain_detailed(f: &Matrix, g: &Matrix, tol: &Tolerances) -> Result<GainEstimate> {
    f.require_square("isiss_gain")?;
    if g.rows() != f.rows() {
        return Err(Error::dim(
            "isiss_gain",
            format!("G with {} rows", f.rows()),
            format!("{} rows", g.rows()),
        ));
    }
    let env = hurwitz_envelope_with(f, tol)?;
    let norm_g = induced_two_norm_with(g, tol)?;
    let norm_f = induced_two_norm_with(f, tol)?;
    let tail_scale = env.c * norm_f * norm_g / env.lambda;
    // c‖F‖‖G‖e^{−λT}/λ < tail_tol
    let horizon = if tail_scale <= tol.tail_tol {
        0.0
    } else {
        (tail_scale / tol.tail_tol).ln() / env.lambda
    };
    if horizon == 0.0 {
        return Ok(GainEstimate {
            gamma: norm_g,
            horizon,
            panels: 0,
            rel_change: 0.0,
        });
    }

    let integrand = |s: f64| -> Result<f64> {
        let k = f.matmul(&mat_exp(f, s)?)?.matmul(g)?;
        induced_two_norm_with(&k, tol)
    };

    let max_width = tol.panel_scale / env.lambda;
    let mut panels = (horizon / max_width).ceil().max(1.0) as usize;
    let mut prev = composite_gauss(&integrand, horizon, panels)?;
    let mut rel_change = f64::INFINITY;
    for _ in 0..tol.quad_max_refinements {
        panels *= 2;
        let next = composite_gauss(&integrand, horizon, panels)?;
        rel_change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if rel_change < tol.quad_rel_tol {
            break;
        }
    }
    Ok(GainEstimate {
        gamma: norm_g + prev,
        horizon,
        panels,
        rel_change,
    })
}

fn composite_gauss(f: &impl Fn(f64) -> Result<f64>, horizon: f64, panels: usize) -> Result<f64> {
    let w = horizon / panels as f64;
    let half = 0.5 * w;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * w;
        let mut acc = 0.0;
        for (x, wt) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            acc += wt * (f(mid - half * x)? + f(mid + half * x)?);
        }
        total += half * acc;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_gains_are_two() {
        for a in [-1.0, -2.0, -7.5] {
            let g = isiss_gain(&Matrix::scalar(a), &Matrix::scalar(1.0)).unwrap();
            assert!((g - 2.0).abs() < 1e-6, "a = {a}: {g}");
        }
    }

    #[test]
    fn scales_linearly_in_g() {
        let g1 = isiss_gain(&Matrix::scalar(-1.0), &Matrix::scalar(3.0)).unwrap();
        assert!((g1 - 6.0).abs() < 1e-6);
    }

    #[test]
    fn non_hurwitz_is_domain_error() {
        assert_eq!(
            isiss_gain(&Matrix::scalar(0.5), &Matrix::scalar(1.0)),
            Err(Error::NotHurwitz)
        );
    }

    #[test]
    fn row_mismatch() {
        assert!(isiss_gain(&Matrix::identity(2).scale(-1.0), &Matrix::zeros(3, 1)).is_err());
    }
}
