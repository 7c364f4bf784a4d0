//! Dense real linear-algebra kernels: matrix exponential, induced 2-norm,
//! Lyapunov-based Hurwitz certificates and decay envelopes, and the iSISS
//! gain integral.

mod expm;
mod gain;
mod lyapunov;
mod matrix;
mod norm;

pub use expm::mat_exp;
pub use gain::{isiss_gain, isiss_gain_detailed, GainEstimate};
pub use lyapunov::{
    char_poly_residual, hurwitz_envelope, hurwitz_envelope_with, is_hurwitz, is_hurwitz_with,
    lyapunov_solution, DecayEnvelope,
};
pub use matrix::{vec_norm, Lu, Matrix};
pub use norm::{induced_two_norm, induced_two_norm_with};

/// Numerical tolerances used across the kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative Rayleigh-quotient change that stops power iteration.
    pub power_tol: f64,
    pub power_max_iter: usize,
    /// Minimum Cholesky pivot for a positive-definite verdict.
    pub cholesky_pivot_tol: f64,
    /// LU pivot (relative to the operator's max entry) below which the
    /// Lyapunov operator counts as singular.
    pub singular_rel_tol: f64,
    /// Bound on the neglected tail of the gain integral.
    pub tail_tol: f64,
    /// Panel width is at most `panel_scale / lambda`.
    pub panel_scale: f64,
    pub quad_rel_tol: f64,
    pub quad_max_refinements: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            power_tol: 1e-12,
            power_max_iter: 100_000,
            cholesky_pivot_tol: 1e-10,
            singular_rel_tol: 1e-12,
            tail_tol: 1e-8,
            panel_scale: 0.05,
            quad_rel_tol: 1e-6,
            quad_max_refinements: 8,
        }
    }
}
