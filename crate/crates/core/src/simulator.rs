//! Hybrid closed-loop simulation with threshold-event localization.
//!
//! The plant flows exactly (`e^{Aτ}`) between spikes. Each neuron state is
//! advanced by RK4 on `ξ' = rate(y(t))`; since the right-hand side does not
//! depend on `ξ`, one RK4 step over `[0, τ]` is Simpson's rule on the rate at
//! `0, τ/2, τ`. A step whose increment carries some `ξ` past its threshold is
//! split at the earliest crossing (found by bisection), the plant and every
//! neuron are moved to that instant, the firing neurons reset and kick the
//! plant, and the rest of the step is integrated from there.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrixkit::{mat_exp, vec_norm, Matrix};
use crate::network::{pwa_eval, ControllerNetwork, PwaFunction};
use crate::neuron::{Dirac, IafNeuron, SpikeEvent, SpikingSignal};
use crate::plant::{apply_impulse_in_place, ClosedLoopReference, LtiPlant};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub base_step: f64,
    pub event_tol: f64,
    pub sample_stride: usize,
    pub merge_window: f64,
}

impl SimConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            base_step: 1e-4,
            event_tol: 1e-9,
            sample_stride: 1,
            merge_window: 1e-9,
        }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.base_step = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| {
            if c {
                Ok(())
            } else {
                Err(Error::domain(msg.to_string()))
            }
        };
        ok(
            self.t_end > 0.0 && self.t_end.is_finite(),
            "t_end must be positive",
        )?;
        ok(
            self.base_step > 0.0 && self.base_step < self.t_end,
            "base_step must lie in (0, t_end)",
        )?;
        ok(
            self.event_tol > 0.0 && self.event_tol < self.base_step,
            "event_tol must lie in (0, base_step)",
        )?;
        ok(self.sample_stride >= 1, "sample_stride must be at least 1")?;
        ok(
            self.merge_window >= 0.0 && self.merge_window < self.base_step,
            "merge_window must lie in [0, base_step)",
        )?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SimStatus {
    Completed,
    /// A neuron fired again sooner than `Δ/(2·M_emp)`.
    ZenoGuardTripped {
        neuron_id: usize,
        time: f64,
        gap: f64,
        limit: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeuronStats {
    pub spikes: usize,
    /// Largest rate seen at an integration node.
    pub m_emp: f64,
    /// Smallest `gap·M_emp/Δ` over consecutive spikes; `None` with fewer
    /// than two measurable spikes.
    pub min_dwell_ratio: Option<f64>,
}

/// Sampled run. Plant-free replays leave `states`, `reference` and
/// `state_error` rows empty.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
    pub state_error: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub neuron_states: Vec<Vec<f64>>,
    pub spikes: Vec<SpikeEvent>,
    pub neuron_stats: Vec<NeuronStats>,
    pub status: SimStatus,
    pub base_step: f64,
    pub t_end: f64,
}

impl SimResult {
    pub fn completed(&self) -> bool {
        self.status == SimStatus::Completed
    }

    pub fn spike_count(&self) -> usize {
        self.spikes.len()
    }

    pub fn train(&self, neuron_id: usize) -> Vec<f64> {
        self.spikes
            .iter()
            .filter(|s| s.neuron_id == neuron_id)
            .map(|s| s.time)
            .collect()
    }

    pub fn max_state_error(&self) -> f64 {
        self.state_error
            .iter()
            .map(|e| vec_norm(e))
            .fold(0.0, f64::max)
    }

    pub fn max_state_norm(&self) -> f64 {
        self.states.iter().map(|e| vec_norm(e)).fold(0.0, f64::max)
    }
}

trait Source {
    /// Output `y` a time `tau` after the current instant, without moving.
    fn output_after(&self, tau: f64) -> Vec<f64>;
    fn advance(&mut self, tau: f64);
    fn jump(&mut self, channel: usize, amplitude: f64);
    fn state(&self) -> Vec<f64>;
    /// Snap the source clock to a grid time.
    fn sync(&mut self, _t: f64) {}
}

struct PlantSource<'a> {
    plant: &'a LtiPlant,
    x: Vec<f64>,
    h: f64,
    e_full: Matrix,
    e_half: Matrix,
}

impl PlantSource<'_> {
    fn propagate(&self, tau: f64) -> Vec<f64> {
        if tau == 0.0 {
            return self.x.clone();
        }
        let mut out = vec![0.0; self.x.len()];
        if tau == self.h {
            self.e_full.mul_vec_into(&self.x, &mut out);
        } else if tau == 0.5 * self.h {
            self.e_half.mul_vec_into(&self.x, &mut out);
        } else {
            let e = mat_exp(self.plant.a(), tau).expect("square A");
            e.mul_vec_into(&self.x, &mut out);
        }
        out
    }
}

impl Source for PlantSource<'_> {
    fn output_after(&self, tau: f64) -> Vec<f64> {
        let mut y = vec![0.0; self.plant.ny()];
        self.plant.c().mul_vec_into(&self.propagate(tau), &mut y);
        y
    }

    fn advance(&mut self, tau: f64) {
        self.x = self.propagate(tau);
    }

    fn jump(&mut self, channel: usize, amplitude: f64) {
        apply_impulse_in_place(self.plant, &mut self.x, channel, amplitude)
            .expect("channel checked at setup");
    }

    fn state(&self) -> Vec<f64> {
        self.x.clone()
    }
}

struct SignalSource<F> {
    f: F,
    t: f64,
}

impl<F: Fn(f64) -> Vec<f64>> Source for SignalSource<F> {
    fn output_after(&self, tau: f64) -> Vec<f64> {
        (self.f)(self.t + tau)
    }

    fn advance(&mut self, tau: f64) {
        self.t += tau;
    }

    fn jump(&mut self, _channel: usize, _amplitude: f64) {}

    fn state(&self) -> Vec<f64> {
        Vec::new()
    }

    fn sync(&mut self, t: f64) {
        self.t = t;
    }
}

struct RawRun {
    times: Vec<f64>,
    /// `(k, s)`: sample taken `s` after grid time `k·h`.
    grid: Vec<(usize, f64)>,
    states: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    xi: Vec<Vec<f64>>,
    spikes: Vec<SpikeEvent>,
    stats: Vec<NeuronStats>,
    status: SimStatus,
}

impl RawRun {
    fn record<S: Source>(&mut self, t: f64, grid: (usize, f64), src: &S, net: &ControllerNetwork) {
        self.times.push(t);
        self.grid.push(grid);
        self.states.push(src.state());
        self.outputs.push(src.output_after(0.0));
        self.xi.push(net.states());
    }
}

fn simpson(r0: f64, rm: f64, r1: f64, tau: f64) -> f64 {
    tau / 6.0 * (r0 + 4.0 * rm + r1)
}

/// `∫₀^τ max{0, d(t)} dt` from the drive `d` at `0, τ/2, τ`. Where `d`
/// changes sign the interval is cut at the zero so Simpson's rule only sees
/// smooth pieces.
fn increment<S: Source>(nr: &IafNeuron, src: &S, d0: f64, dm: f64, d1: f64, tau: f64) -> f64 {
    if d0 * dm >= 0.0 && dm * d1 >= 0.0 {
        return simpson(d0.max(0.0), dm.max(0.0), d1.max(0.0), tau);
    }
    let mut cuts = vec![(0.0, d0)];
    if d0 * dm < 0.0 {
        cuts.push((drive_root(nr, src, 0.0, d0, 0.5 * tau, dm), 0.0));
    }
    if dm * d1 < 0.0 {
        cuts.push((drive_root(nr, src, 0.5 * tau, dm, tau, d1), 0.0));
    }
    cuts.push((tau, d1));
    cuts.windows(2)
        .map(|w| {
            let ((a, fa), (b, fb)) = (w[0], w[1]);
            let mid = nr.drive(&src.output_after(0.5 * (a + b)));
            if b > a && mid > 0.0 {
                simpson(fa.max(0.0), mid, fb.max(0.0), b - a)
            } else {
                0.0
            }
        })
        .sum()
}

/// Zero of the drive on `[a, b]` (Illinois false position).
fn drive_root<S: Source>(
    nr: &IafNeuron,
    src: &S,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
) -> f64 {
    let tol = 4.0 * f64::EPSILON * b.abs().max(1e-300);
    let mut prev = f64::NAN;
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (fa * b - fb * a) / (fa - fb);
        if (c - prev).abs() <= tol {
            return c;
        }
        prev = c;
        let fc = nr.drive(&src.output_after(c));
        if fc == 0.0 {
            return c;
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    prev
}

/// Smallest `s ∈ (0, tau]` with `xi0 + ∫₀ˢ rate ≥ threshold`, to within `tol`.
/// `inc(s)` is the rate integral over `[0, s]`; the caller guarantees
/// `xi0 + inc(tau) ≥ threshold`.
pub fn locate_event(inc: impl Fn(f64) -> f64, xi0: f64, threshold: f64, tau: f64, tol: f64) -> f64 {
    if xi0 >= threshold {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, tau);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if xi0 + inc(mid) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn run_engine<S: Source>(src: &mut S, net: &mut ControllerNetwork, cfg: &SimConfig) -> RawRun {
    let h = cfg.base_step;
    let ratio = cfg.t_end / h;
    let rounded = ratio.round();
    let (n_whole, has_tail) = if (ratio - rounded).abs() <= 1e-9 * ratio {
        (rounded as usize, false)
    } else {
        (ratio.floor() as usize, true)
    };
    let n_steps = n_whole + usize::from(has_tail);
    let n = net.len();

    let mut run = RawRun {
        times: Vec::new(),
        grid: Vec::new(),
        states: Vec::new(),
        outputs: Vec::new(),
        xi: Vec::new(),
        spikes: Vec::new(),
        stats: vec![
            NeuronStats {
                spikes: 0,
                m_emp: 0.0,
                min_dwell_ratio: None,
            };
            n
        ],
        status: SimStatus::Completed,
    };
    // a neuron starting from rest has a measurable first gap
    let mut last_spike: Vec<Option<f64>> = net
        .neurons()
        .iter()
        .map(|nr| (nr.state() == 0.0).then_some(0.0))
        .collect();
    run.record(0.0, (0, 0.0), src, net);

    let drives_at = |net: &ControllerNetwork, y: &[f64]| -> Vec<f64> {
        net.neurons().iter().map(|nr| nr.drive(y)).collect()
    };

    for k in 0..n_steps {
        let t_k = k as f64 * h;
        let whole = k < n_whole;
        let step_len = if whole { h } else { cfg.t_end - t_k };
        let mut off = 0.0;
        loop {
            let tau = if off == 0.0 { step_len } else { step_len - off };
            if tau <= 0.0 {
                break;
            }
            let d0 = drives_at(net, &src.output_after(0.0));
            let dm = drives_at(net, &src.output_after(0.5 * tau));
            let d1 = drives_at(net, &src.output_after(tau));
            let incs: Vec<f64> = (0..n)
                .map(|i| increment(net.neuron(i), src, d0[i], dm[i], d1[i], tau))
                .collect();
            let candidates: Vec<usize> = (0..n)
                .filter(|&i| net.neuron(i).state() + incs[i] >= net.neuron(i).threshold())
                .collect();
            if candidates.is_empty() {
                for i in 0..n {
                    run.stats[i].m_emp = run.stats[i].m_emp.max(d0[i]).max(dm[i]).max(d1[i]);
                    net.neurons_mut()[i].advance(incs[i]);
                }
                src.advance(tau);
                break;
            }

            let crossing: Vec<(usize, f64)> = candidates
                .iter()
                .map(|&i| {
                    let nr = net.neuron(i);
                    let inc = |s: f64| {
                        let dm = nr.drive(&src.output_after(0.5 * s));
                        let d1 = nr.drive(&src.output_after(s));
                        increment(nr, src, d0[i], dm, d1, s)
                    };
                    (
                        i,
                        locate_event(inc, nr.state(), nr.threshold(), tau, cfg.event_tol),
                    )
                })
                .collect();
            let t_star = crossing.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let firing: Vec<usize> = crossing
                .iter()
                .filter(|c| c.1 <= t_star + cfg.merge_window)
                .map(|c| c.0)
                .collect();

            if t_star > 0.0 {
                let dm = drives_at(net, &src.output_after(0.5 * t_star));
                let d1 = drives_at(net, &src.output_after(t_star));
                for i in 0..n {
                    run.stats[i].m_emp = run.stats[i].m_emp.max(d0[i]).max(dm[i]).max(d1[i]);
                    let inc = increment(net.neuron(i), src, d0[i], dm[i], d1[i], t_star);
                    net.neurons_mut()[i].advance(inc);
                }
                src.advance(t_star);
            }
            off += t_star;
            let t = t_k + off;
            run.record(t, (k, off), src, net);

            for &i in &firing {
                let nr = net.neuron(i);
                let (threshold, amp) = (nr.threshold(), nr.signed_amplitude());
                let m = run.stats[i].m_emp;
                if let Some(prev) = last_spike[i] {
                    let gap = t - prev;
                    let ratio = gap * m / threshold;
                    let st = &mut run.stats[i];
                    st.min_dwell_ratio = Some(st.min_dwell_ratio.map_or(ratio, |r| r.min(ratio)));
                    let limit = threshold / (2.0 * m);
                    if gap < limit {
                        run.status = SimStatus::ZenoGuardTripped {
                            neuron_id: i,
                            time: t,
                            gap,
                            limit,
                        };
                        return run;
                    }
                }
                last_spike[i] = Some(t);
                run.stats[i].spikes += 1;
                net.neurons_mut()[i].fire();
                let channel = net.channel(i);
                src.jump(channel, amp);
                run.spikes.push(SpikeEvent {
                    time: t,
                    neuron_id: i,
                    channel,
                    signed_amplitude: amp,
                });
            }
            run.record(t, (k, off), src, net);
        }

        let t_next = if whole { (k + 1) as f64 * h } else { cfg.t_end };
        src.sync(t_next);
        if (k + 1) % cfg.sample_stride == 0 || k + 1 == n_steps {
            let grid = if whole { (k + 1, 0.0) } else { (k, step_len) };
            run.record(t_next, grid, src, net);
        }
    }
    run
}

fn check_network(net: &ControllerNetwork, ny: usize, nu: usize) -> Result<()> {
    if net.is_empty() {
        return Err(Error::domain("controller network has no neurons"));
    }
    for (id, nr) in net.neurons().iter().enumerate() {
        if nr.input_weights().len() != ny {
            return Err(Error::dim(
                "simulate",
                format!("neuron {id} reading {ny} outputs"),
                nr.input_weights().len(),
            ));
        }
        if net.channel(id) >= nu {
            return Err(Error::dim(
                "simulate",
                format!("neuron {id} feeding a channel below {nu}"),
                net.channel(id),
            ));
        }
    }
    Ok(())
}

/// Simulates the spiking closed loop and the ideal reference side by side.
pub fn simulate(
    plant: &LtiPlant,
    net: &ControllerNetwork,
    reference: &ClosedLoopReference,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    check_network(net, plant.ny(), plant.nu())?;
    if reference.abar().rows() != plant.nx() {
        return Err(Error::dim(
            "simulate",
            format!("reference of order {}", plant.nx()),
            reference.abar().rows(),
        ));
    }
    let h = cfg.base_step;
    let mut src = PlantSource {
        plant,
        x: reference.x0().to_vec(),
        h,
        e_full: mat_exp(plant.a(), h)?,
        e_half: mat_exp(plant.a(), 0.5 * h)?,
    };
    let mut net = net.clone();
    let raw = run_engine(&mut src, &mut net, cfg);

    // x̄ on the grid by the cached one-step propagator, fresh inside a step
    let e_bar = mat_exp(reference.abar(), h)?;
    let mut grid_k = 0;
    let mut xbar_grid = reference.x0().to_vec();
    let mut scratch = vec![0.0; plant.nx()];
    let mut xbar = Vec::with_capacity(raw.times.len());
    for &(k, s) in &raw.grid {
        while grid_k < k {
            e_bar.mul_vec_into(&xbar_grid, &mut scratch);
            std::mem::swap(&mut xbar_grid, &mut scratch);
            grid_k += 1;
        }
        if s == 0.0 {
            xbar.push(xbar_grid.clone());
        } else {
            xbar.push(mat_exp(reference.abar(), s)?.mul_vec(&xbar_grid)?);
        }
    }
    let state_error = raw
        .states
        .iter()
        .zip(&xbar)
        .map(|(x, xb)| x.iter().zip(xb).map(|(a, b)| a - b).collect())
        .collect();
    Ok(SimResult {
        times: raw.times,
        states: raw.states,
        reference: xbar,
        state_error,
        outputs: raw.outputs,
        neuron_states: raw.xi,
        spikes: raw.spikes,
        neuron_stats: raw.stats,
        status: raw.status,
        base_step: h,
        t_end: cfg.t_end,
    })
}

/// Drives the network open loop with a prescribed input signal `y(t)`.
pub fn replay(
    net: &ControllerNetwork,
    input: impl Fn(f64) -> Vec<f64>,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    let y0 = input(0.0);
    check_network(net, y0.len(), net.n_channels())?;
    let mut src = SignalSource { f: input, t: 0.0 };
    let mut net = net.clone();
    let raw = run_engine(&mut src, &mut net, cfg);
    let empty = vec![Vec::new(); raw.times.len()];
    Ok(SimResult {
        times: raw.times,
        states: empty.clone(),
        reference: empty.clone(),
        state_error: empty,
        outputs: raw.outputs,
        neuron_states: raw.xi,
        spikes: raw.spikes,
        neuron_stats: raw.stats,
        status: raw.status,
        base_step: cfg.base_step,
        t_end: cfg.t_end,
    })
}

/// The static map the network is meant to emulate.
#[derive(Clone, Copy, Debug)]
pub enum Emulated<'a> {
    Linear(&'a Matrix),
    Pwa(&'a PwaFunction),
}

impl Emulated<'_> {
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Emulated::Linear(k) => k.mul_vec(y).expect("gain shape checked"),
            Emulated::Pwa(g) => vec![pwa_eval(g, y[0])],
        }
    }

    fn dim(&self) -> usize {
        match self {
            Emulated::Linear(k) => k.rows(),
            Emulated::Pwa(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelMetrics {
    /// `sup_t |∫₀ᵗ e_i|` over samples.
    pub sup: f64,
    /// Sum of member amplitudes.
    pub bound: f64,
    /// `max(Σ α over positive-sign members, Σ α over negative-sign members)`,
    /// valid when every member starts from rest.
    pub bound_from_rest: f64,
    pub eps_num: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeuronMetrics {
    pub spikes: usize,
    pub m_emp: f64,
    /// `sup_t |gain·∫₀ᵗ rate − α·(spikes up to t)|`.
    pub sup: f64,
    pub amplitude: f64,
    /// `10·h·M_emp·gain`.
    pub eps_num: f64,
    pub min_dwell_ratio: Option<f64>,
}

/// Emulation error `e = ŷ − u` of a run, where `ŷ` is the emulated map
/// applied to `y`, with the derived checks.
#[derive(Clone, Debug)]
pub struct EmulationTrace {
    pub e_signal: SpikingSignal,
    pub e_star: f64,
    /// `max_t |∫₀ᵗ e_i − Σ 𝒢·gain·(ξ(t) − ξ(0))|` over samples and channels.
    pub psi_identity_residual: f64,
    /// `t_end · max |ŷ|`, the natural scale of the residual.
    pub identity_scale: f64,
    pub channels: Vec<ChannelMetrics>,
    pub neurons: Vec<NeuronMetrics>,
}

impl EmulationTrace {
    /// Channel slacks combined like the channel bounds.
    pub fn eps_num(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.eps_num * c.eps_num)
            .sum::<f64>()
            .sqrt()
    }

    pub fn relative_identity_residual(&self) -> f64 {
        if self.identity_scale > 0.0 {
            self.psi_identity_residual / self.identity_scale
        } else {
            self.psi_identity_residual
        }
    }
}

pub fn emulation_metrics(
    sim: &SimResult,
    target: Emulated<'_>,
    net: &ControllerNetwork,
) -> Result<EmulationTrace> {
    if target.dim() != net.n_channels() {
        return Err(Error::dim(
            "emulation_metrics",
            format!("{} channels", net.n_channels()),
            target.dim(),
        ));
    }
    if let Emulated::Linear(k) = target {
        if k.cols() != net.n_inputs() {
            return Err(Error::dim(
                "emulation_metrics",
                format!("K with {} columns", net.n_inputs()),
                k.cols(),
            ));
        }
    }
    let dim = target.dim();
    let n = net.len();
    let ns = sim.times.len();
    let mut times = sim.times.clone();
    let mut values: Vec<f64> = sim.outputs.iter().flat_map(|y| target.eval(y)).collect();
    if ns < 2 {
        // degenerate single-sample run: pad to a zero-width grid
        times.push(times[0]);
        values.extend_from_within(..);
    }
    let diracs = sim
        .spikes
        .iter()
        .map(|s| {
            let mut w = vec![0.0; dim];
            w[s.channel] = -s.signed_amplitude;
            Dirac {
                time: s.time,
                weight: w,
            }
        })
        .collect();
    let e_signal = SpikingSignal::new(dim, times, values, diracs)?;
    let e_star = e_signal.star_norm();
    let integrals = e_signal.running_integral_samples();

    let xi0 = &sim.neuron_states[0];
    let mut residual: f64 = 0.0;
    let mut channel_sup = vec![0.0f64; dim];
    for (k, acc) in integrals.iter().take(ns).enumerate() {
        let mut predicted = vec![0.0; dim];
        for id in 0..n {
            let nr = net.neuron(id);
            predicted[net.channel(id)] +=
                nr.sign_gain().value() * nr.gain() * (sim.neuron_states[k][id] - xi0[id]);
        }
        for c in 0..dim {
            residual = residual.max((acc[c] - predicted[c]).abs());
            channel_sup[c] = channel_sup[c].max(acc[c].abs());
        }
    }
    let max_target = e_signal_max_abs(&e_signal, ns);
    let identity_scale = sim.t_end * max_target;

    // per-neuron: trapezoid of sampled rates against the spike count
    let h = sim.base_step;
    let mut neurons = Vec::with_capacity(n);
    for id in 0..n {
        let nr = net.neuron(id);
        let gain = nr.gain();
        let train = sim.train(id);
        let mut integral = 0.0;
        let mut prev_rate = nr.rate(&sim.outputs[0]);
        let mut fired = 0usize;
        let mut sup: f64 = 0.0;
        for k in 0..ns {
            let r = nr.rate(&sim.outputs[k]);
            if k > 0 {
                integral += 0.5 * (sim.times[k] - sim.times[k - 1]) * (prev_rate + r);
            }
            prev_rate = r;
            let t = sim.times[k];
            let last_at_t = k + 1 == ns || sim.times[k + 1] > t;
            while fired < train.len() && (train[fired] < t || (train[fired] == t && last_at_t)) {
                fired += 1;
            }
            sup = sup.max((gain * integral - nr.amplitude() * fired as f64).abs());
        }
        let m = sim.neuron_stats[id].m_emp;
        neurons.push(NeuronMetrics {
            spikes: train.len(),
            m_emp: m,
            sup,
            amplitude: nr.amplitude(),
            eps_num: 10.0 * h * m * gain,
            min_dwell_ratio: sim.neuron_stats[id].min_dwell_ratio,
        });
    }

    let channels = (0..dim)
        .map(|c| {
            let members = net.channel_members(c);
            let (mut plus, mut minus, mut eps) = (0.0, 0.0, 0.0);
            for &id in &members {
                let nr = net.neuron(id);
                if nr.sign_gain().value() > 0.0 {
                    plus += nr.amplitude();
                } else {
                    minus += nr.amplitude();
                }
                eps += neurons[id].eps_num;
            }
            ChannelMetrics {
                sup: channel_sup[c],
                bound: plus + minus,
                bound_from_rest: f64::max(plus, minus),
                eps_num: eps,
            }
        })
        .collect();

    Ok(EmulationTrace {
        e_signal,
        e_star,
        psi_identity_residual: residual,
        identity_scale,
        channels,
        neurons,
    })
}

fn e_signal_max_abs(v: &SpikingSignal, ns: usize) -> f64 {
    (0..ns)
        .flat_map(|k| v.value(k).iter().map(|x| x.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}
