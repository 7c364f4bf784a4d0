//! LTI plant `ẋ = Ax + Bu, y = Cx` with impulsive inputs, and the ideal
//! static-feedback closed loop it is compared against.

use crate::error::{Error, Result};
use crate::matrixkit::{hurwitz_envelope, mat_exp, DecayEnvelope, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct LtiPlant {
    a: Matrix,
    b: Matrix,
    c: Matrix,
}

impl LtiPlant {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        a.require_square("LtiPlant::new")?;
        let n = a.rows();
        if b.rows() != n {
            return Err(Error::dim(
                "LtiPlant::new",
                format!("B with {n} rows"),
                format!("{} rows", b.rows()),
            ));
        }
        if c.cols() != n {
            return Err(Error::dim(
                "LtiPlant::new",
                format!("C with {n} columns"),
                format!("{} columns", c.cols()),
            ));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn nx(&self) -> usize {
        self.a.rows()
    }

    pub fn nu(&self) -> usize {
        self.b.cols()
    }

    pub fn ny(&self) -> usize {
        self.c.rows()
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.c.mul_vec(x)
    }

    /// `A + BKC` for a static output feedback gain `K` (nu×ny).
    pub fn closed_loop_matrix(&self, k: &Matrix) -> Result<Matrix> {
        if k.rows() != self.nu() || k.cols() != self.ny() {
            return Err(Error::dim(
                "closed_loop_matrix",
                format!("K of shape {}x{}", self.nu(), self.ny()),
                format!("{}x{}", k.rows(), k.cols()),
            ));
        }
        let bkc = self.b.matmul(k)?.matmul(&self.c)?;
        self.a.try_add(&bkc)
    }
}

/// `e^{A dt} x`: the exact flow with `u ≡ 0`.
pub fn flow_open_loop(plant: &LtiPlant, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::OutOfRange(format!(
            "flow_open_loop: dt = {dt} must be finite and >= 0"
        )));
    }
    check_state(plant.nx(), x, "flow_open_loop")?;
    mat_exp(plant.a(), dt)?.mul_vec(x)
}

/// `x + amplitude · B[:, channel]`.
pub fn apply_impulse(
    plant: &LtiPlant,
    x: &[f64],
    channel: usize,
    signed_amplitude: f64,
) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    apply_impulse_in_place(plant, &mut out, channel, signed_amplitude)?;
    Ok(out)
}

pub fn apply_impulse_in_place(
    plant: &LtiPlant,
    x: &mut [f64],
    channel: usize,
    signed_amplitude: f64,
) -> Result<()> {
    check_state(plant.nx(), x, "apply_impulse")?;
    if channel >= plant.nu() {
        return Err(Error::OutOfRange(format!(
            "apply_impulse: channel {channel} outside 0..{}",
            plant.nu()
        )));
    }
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += signed_amplitude * plant.b()[(i, channel)];
    }
    Ok(())
}

fn check_state(nx: usize, x: &[f64], op: &'static str) -> Result<()> {
    if x.len() != nx {
        return Err(Error::dim(
            op,
            format!("state of length {nx}"),
            format!("length {}", x.len()),
        ));
    }
    Ok(())
}

/// The ideal loop `ẋ̄ = Āx̄`, `Ā = A + BKC`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopReference {
    abar: Matrix,
    x0: Vec<f64>,
    envelope: DecayEnvelope,
}

impl ClosedLoopReference {
    /// Fails with [`Error::NotHurwitz`] unless `abar` is Hurwitz.
    pub fn new(abar: Matrix, x0: Vec<f64>) -> Result<Self> {
        abar.require_square("ClosedLoopReference::new")?;
        check_state(abar.rows(), &x0, "ClosedLoopReference::new")?;
        if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let envelope = hurwitz_envelope(&abar)?;
        Ok(Self { abar, x0, envelope })
    }

    pub fn for_feedback(plant: &LtiPlant, k: &Matrix, x0: Vec<f64>) -> Result<Self> {
        Self::new(plant.closed_loop_matrix(k)?, x0)
    }

    pub fn abar(&self) -> &Matrix {
        &self.abar
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn envelope(&self) -> DecayEnvelope {
        self.envelope
    }
}

/// `e^{Ā t} x0`.
pub fn reference_state(reference: &ClosedLoopReference, t: f64) -> Result<Vec<f64>> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::OutOfRange(format!(
            "reference_state: t = {t} must be finite and >= 0"
        )));
    }
    mat_exp(&reference.abar, t)?.mul_vec(&reference.x0)
}
