//! Closed-form guarantees and their verification against simulated runs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrixkit::{isiss_gain, vec_norm, DecayEnvelope, Matrix};
use crate::network::{ControllerNetwork, NetworkKind};
use crate::plant::{ClosedLoopReference, LtiPlant};
use crate::simulator::{EmulationTrace, SimResult};

/// `γ(α₁+α₂)`, or `γ·max(α₁, α₂)` when both neurons start at rest.
pub fn siso_bound(gamma: f64, alpha1: f64, alpha2: f64, xi0_zero: bool) -> f64 {
    if xi0_zero {
        gamma * alpha1.max(alpha2)
    } else {
        gamma * (alpha1 + alpha2)
    }
}

/// `γ·sqrt(Σ_i (Σ_j (α₁ᵢⱼ + α₂ᵢⱼ))²)`.
pub fn mimo_bound(gamma: f64, alpha1: &Matrix, alpha2: &Matrix) -> Result<f64> {
    if alpha1.rows() != alpha2.rows() || alpha1.cols() != alpha2.cols() {
        return Err(Error::dim(
            "mimo_bound",
            format!("{}x{}", alpha1.rows(), alpha1.cols()),
            format!("{}x{}", alpha2.rows(), alpha2.cols()),
        ));
    }
    let rows: Vec<f64> = (0..alpha1.rows())
        .map(|i| {
            alpha1
                .row(i)
                .iter()
                .zip(alpha2.row(i))
                .map(|(a, b)| a + b)
                .sum()
        })
        .collect();
    Ok(gamma * vec_norm(&rows))
}

/// `γ·sqrt(Σ_i (α₁ᵢ + α₂ᵢ)²)`.
pub fn rowgain_bound(gamma: f64, alpha1: &[f64], alpha2: &[f64]) -> Result<f64> {
    if alpha1.len() != alpha2.len() {
        return Err(Error::dim("rowgain_bound", alpha1.len(), alpha2.len()));
    }
    let rows: Vec<f64> = alpha1.iter().zip(alpha2).map(|(a, b)| a + b).collect();
    Ok(gamma * vec_norm(&rows))
}

/// `Σ α_i`, a bound on `|∫(g(y) − u)|` itself.
pub fn pwa_bound(alpha: &[f64]) -> f64 {
    alpha.iter().sum()
}

/// `c·e^{−λt}·|x0| + γ·e_star_bound`.
pub fn practical_bound(
    envelope: DecayEnvelope,
    x0_norm: f64,
    gamma: f64,
    e_star_bound: f64,
    t: f64,
) -> f64 {
    envelope.at(t) * x0_norm + gamma * e_star_bound
}

/// Bound on `‖e‖⋆` for a network in its stated form: the pair bound for a
/// SISO pair, the root-sum-square of channel amplitude totals for the MIMO
/// constructions, and the plain amplitude sum for a PWA network.
pub fn network_emulation_bound(net: &ControllerNetwork) -> f64 {
    let totals = net.channel_amplitudes();
    match net.kind() {
        NetworkKind::SisoPair => {
            let (a1, a2) = (net.neuron(0).amplitude(), net.neuron(1).amplitude());
            siso_bound(1.0, a1, a2, net.all_states_zero())
        }
        NetworkKind::MimoGrid | NetworkKind::MimoRowgain => vec_norm(&totals),
        NetworkKind::Pwa => totals.iter().sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub achieved: f64,
    pub limit: f64,
    pub eps_num: f64,
    pub direction: Direction,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, achieved: f64, limit: f64, eps_num: f64) -> Self {
        Self {
            name: name.into(),
            achieved,
            limit,
            eps_num,
            direction: Direction::AtMost,
            pass: achieved <= limit + eps_num,
        }
    }

    pub fn at_least(name: impl Into<String>, achieved: f64, limit: f64, eps_num: f64) -> Self {
        Self {
            name: name.into(),
            achieved,
            limit,
            eps_num,
            direction: Direction::AtLeast,
            pass: achieved >= limit - eps_num,
        }
    }
}

/// Everything `verify` needs beyond the run itself.
#[derive(Clone, Debug, PartialEq)]
pub struct CertInputs {
    pub kind: NetworkKind,
    /// Loop gain; `None` for signal-level (PWA) checks.
    pub gamma: Option<f64>,
    pub envelope: Option<DecayEnvelope>,
    pub x0_norm: f64,
    pub e_star_bound: f64,
    /// Limit on the identity residual relative to its natural scale.
    pub identity_rel_tol: f64,
    /// Allowed shortfall of the dwell ratio below 1.
    pub dwell_tol: f64,
}

impl CertInputs {
    /// Closed loop: `γ = isiss_gain(Ā, B)` and the Lyapunov envelope of `Ā`.
    pub fn for_loop(
        plant: &LtiPlant,
        reference: &ClosedLoopReference,
        net: &ControllerNetwork,
    ) -> Result<Self> {
        let gamma = isiss_gain(reference.abar(), plant.b())?;
        Ok(Self {
            kind: net.kind(),
            gamma: Some(gamma),
            envelope: Some(reference.envelope()),
            x0_norm: vec_norm(reference.x0()),
            e_star_bound: network_emulation_bound(net),
            identity_rel_tol: 1e-6,
            dwell_tol: 1e-6,
        })
    }

    /// Open-loop replay of a network against a prescribed input.
    pub fn for_signal(net: &ControllerNetwork) -> Self {
        Self {
            kind: net.kind(),
            gamma: None,
            envelope: None,
            x0_norm: 0.0,
            e_star_bound: network_emulation_bound(net),
            identity_rel_tol: 1e-6,
            dwell_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Achieved {
    pub max_xtilde: Option<f64>,
    pub e_star: f64,
    pub spikes: usize,
    pub spikes_per_neuron: Vec<usize>,
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertReport {
    pub kind: NetworkKind,
    pub gamma: Option<f64>,
    pub envelope_c: Option<f64>,
    pub envelope_lambda: Option<f64>,
    pub x0_norm: f64,
    pub e_star_bound: f64,
    /// `γ·e_star_bound`: the bound on `|x̃|` and the ultimate radius.
    pub xtilde_bound: Option<f64>,
    pub eps_num_e: f64,
    pub eps_num_x: Option<f64>,
    pub achieved: Achieved,
    pub status: crate::simulator::SimStatus,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl CertReport {
    /// `β(|x0|, t) + xtilde_bound`.
    pub fn practical_bound_at(&self, t: f64) -> Option<f64> {
        let (c, lambda, gamma) = (self.envelope_c?, self.envelope_lambda?, self.gamma?);
        Some(practical_bound(
            DecayEnvelope { c, lambda },
            self.x0_norm,
            gamma,
            self.e_star_bound,
            t,
        ))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every applicable check; failures are report content.
pub fn verify(sim: &SimResult, trace: &EmulationTrace, inputs: &CertInputs) -> CertReport {
    let eps_e = trace.eps_num();
    let mut checks = Vec::new();
    checks.push(Check::at_most(
        "e_star",
        trace.e_star,
        inputs.e_star_bound,
        eps_e,
    ));
    for (i, ch) in trace.channels.iter().enumerate() {
        checks.push(Check::at_most(
            format!("channel_{i}"),
            ch.sup,
            ch.bound,
            ch.eps_num,
        ));
    }
    for (i, nm) in trace.neurons.iter().enumerate() {
        checks.push(Check::at_most(
            format!("neuron_{i}"),
            nm.sup,
            nm.amplitude,
            nm.eps_num,
        ));
    }
    let dwell = trace
        .neurons
        .iter()
        .filter_map(|n| n.min_dwell_ratio)
        .fold(f64::INFINITY, f64::min);
    if dwell.is_finite() {
        checks.push(Check::at_least("dwell_ratio", dwell, 1.0, inputs.dwell_tol));
    }
    checks.push(Check::at_most(
        "identity_residual",
        trace.relative_identity_residual(),
        inputs.identity_rel_tol,
        0.0,
    ));

    let mut max_xtilde = None;
    let mut xtilde_bound = None;
    let mut eps_x = None;
    if let Some(gamma) = inputs.gamma {
        let mx = sim.max_state_error();
        let bound = gamma * inputs.e_star_bound;
        let ex = gamma * eps_e;
        checks.push(Check::at_most("xtilde", mx, bound, ex));
        if let Some(env) = inputs.envelope {
            let excess = sim
                .times
                .iter()
                .zip(&sim.states)
                .map(|(&t, x)| vec_norm(x) - env.at(t) * inputs.x0_norm)
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::at_most("practical", excess, bound, ex));
        }
        max_xtilde = Some(mx);
        xtilde_bound = Some(bound);
        eps_x = Some(ex);
    }
    let completed = sim.completed();
    let pass = completed && checks.iter().all(|c| c.pass);
    CertReport {
        kind: inputs.kind,
        gamma: inputs.gamma,
        envelope_c: inputs.envelope.map(|e| e.c),
        envelope_lambda: inputs.envelope.map(|e| e.lambda),
        x0_norm: inputs.x0_norm,
        e_star_bound: inputs.e_star_bound,
        xtilde_bound,
        eps_num_e: eps_e,
        eps_num_x: eps_x,
        achieved: Achieved {
            max_xtilde,
            e_star: trace.e_star,
            spikes: sim.spike_count(),
            spikes_per_neuron: sim.neuron_stats.iter().map(|s| s.spikes).collect(),
            identity_residual: trace.psi_identity_residual,
        },
        status: sim.status.clone(),
        checks,
        pass,
    }
}

/// Compares the suprema of a run at step `h` with a rerun at `h/2`.
/// Each quantity may move by less than twice its slack at `h`.
pub fn convergence_check(
    mut run: impl FnMut(f64) -> Result<(SimResult, EmulationTrace)>,
    h: f64,
    gamma: Option<f64>,
) -> Result<Vec<Check>> {
    let (s1, t1) = run(h)?;
    let (s2, t2) = run(0.5 * h)?;
    let eps_e = t1.eps_num();
    let mut checks = vec![Check::at_most(
        "e_star_shift",
        (t1.e_star - t2.e_star).abs(),
        0.0,
        2.0 * eps_e,
    )];
    for (i, (a, b)) in t1.channels.iter().zip(&t2.channels).enumerate() {
        checks.push(Check::at_most(
            format!("channel_{i}_shift"),
            (a.sup - b.sup).abs(),
            0.0,
            2.0 * a.eps_num,
        ));
    }
    if let Some(g) = gamma {
        let shift = (s1.max_state_error() - s2.max_state_error()).abs();
        checks.push(Check::at_most("xtilde_shift", shift, 0.0, 2.0 * g * eps_e));
    }
    Ok(checks)
}
