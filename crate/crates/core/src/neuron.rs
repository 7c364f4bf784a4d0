//! Integrate-and-fire units, spike events, and spiking signals.

use serde::Serialize;

use crate::error::{Error, Result};

/// A ±1 factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Sign of a nonzero real; `None` for zero.
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Plus)
        } else if x < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// One integrate-and-fire neuron.
///
/// Its state obeys `ξ' = max{0, orientation·(w·y − bias)}`. When `ξ` reaches
/// `threshold` the neuron emits a Dirac of weight `sign_gain·amplitude` and
/// `ξ` resets to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct IafNeuron {
    threshold: f64,
    amplitude: f64,
    sign_gain: Sign,
    orientation: Sign,
    bias: f64,
    input_weights: Vec<f64>,
    state: f64,
}

impl IafNeuron {
    pub fn new(
        threshold: f64,
        amplitude: f64,
        sign_gain: Sign,
        orientation: Sign,
        bias: f64,
        input_weights: Vec<f64>,
    ) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::domain(format!(
                "neuron threshold must be positive, got {threshold}"
            )));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!(
                "neuron amplitude must be positive, got {amplitude}"
            )));
        }
        if !bias.is_finite() || input_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain(
                "neuron bias and input weights must be finite",
            ));
        }
        Ok(Self {
            threshold,
            amplitude,
            sign_gain,
            orientation,
            bias,
            input_weights,
            state: 0.0,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn sign_gain(&self) -> Sign {
        self.sign_gain
    }

    pub fn orientation(&self) -> Sign {
        self.orientation
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    /// Emulated gain `α/Δ`.
    pub fn gain(&self) -> f64 {
        self.amplitude / self.threshold
    }

    pub fn signed_amplitude(&self) -> f64 {
        self.sign_gain.value() * self.amplitude
    }

    /// Sets `ξ`; must lie in `[0, threshold)`.
    pub fn set_state(&mut self, xi: f64) -> Result<()> {
        if !(0.0..self.threshold).contains(&xi) {
            return Err(Error::OutOfRange(format!(
                "initial state {xi} outside [0, {})",
                self.threshold
            )));
        }
        self.state = xi;
        Ok(())
    }

    /// `max{0, orientation·(w·y − bias)}`. Panics if `y` has the wrong length.
    pub fn rate(&self, y: &[f64]) -> f64 {
        self.drive(y).max(0.0)
    }

    /// The rectifier argument `orientation·(w·y − bias)`.
    pub fn drive(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.input_weights.len(), "neuron input dimension");
        let s: f64 = self.input_weights.iter().zip(y).map(|(w, v)| w * v).sum();
        self.orientation.value() * (s - self.bias)
    }

    /// Adds `increment` to `ξ` without firing.
    pub(crate) fn advance(&mut self, increment: f64) {
        self.state += increment;
    }

    pub(crate) fn fire(&mut self) {
        self.state = 0.0;
    }

    /// Forward-Euler style update `ξ += rate·dt`; fires and resets once `ξ ≥ Δ`.
    pub fn step(&mut self, rate: f64, dt: f64) -> bool {
        self.state += rate * dt;
        if self.state >= self.threshold {
            self.state = 0.0;
            true
        } else {
            false
        }
    }
}

/// Rate of `neuron` for the output sample `y`.
pub fn neuron_rate(neuron: &IafNeuron, y: &[f64]) -> Result<f64> {
    if y.len() != neuron.input_weights.len() {
        return Err(Error::dim(
            "neuron_rate",
            format!("input of length {}", neuron.input_weights.len()),
            format!("length {}", y.len()),
        ));
    }
    Ok(neuron.rate(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpikeEvent {
    pub time: f64,
    pub neuron_id: usize,
    pub channel: usize,
    pub signed_amplitude: f64,
}

/// A weighted Dirac impulse of a vector-valued spiking signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Dirac {
    pub time: f64,
    pub weight: Vec<f64>,
}

/// `v = v₁ + v₂`: a sampled Lebesgue part `v₁` (piecewise linear between
/// samples, integrated by the trapezoid rule) plus a Dirac train `v₂`.
///
/// Sample times are non-decreasing. A repeated time carries the values just
/// before and just after a jump of `v₁`. Dirac times are strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikingSignal {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    diracs: Vec<Dirac>,
}

impl SpikingSignal {
    /// `values` holds `times.len()` rows of length `dim`, row-major.
    /// Diracs are sorted and same-time weights are summed.
    pub fn new(
        dim: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        mut diracs: Vec<Dirac>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("spiking signal dimension must be positive"));
        }
        if times.len() < 2 {
            return Err(Error::domain("spiking signal needs at least two samples"));
        }
        if values.len() != times.len() * dim {
            return Err(Error::dim(
                "SpikingSignal::new",
                format!("{} values", times.len() * dim),
                format!("{}", values.len()),
            ));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::domain("spiking signal samples must be finite"));
        }
        if times[0] != 0.0 {
            return Err(Error::domain("spiking signal grid must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain(
                "spiking signal sample times must be non-decreasing",
            ));
        }
        let horizon = times[times.len() - 1];
        diracs.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut merged: Vec<Dirac> = Vec::with_capacity(diracs.len());
        for d in diracs {
            if d.weight.len() != dim {
                return Err(Error::dim(
                    "SpikingSignal::new",
                    format!("Dirac weight of length {dim}"),
                    d.weight.len(),
                ));
            }
            if !(d.time >= 0.0 && d.time <= horizon) || d.weight.iter().any(|w| !w.is_finite()) {
                return Err(Error::domain(format!(
                    "Dirac at t = {} outside [0, {horizon}] or non-finite",
                    d.time
                )));
            }
            match merged.last_mut() {
                Some(last) if last.time == d.time => {
                    for (a, b) in last.weight.iter_mut().zip(&d.weight) {
                        *a += b;
                    }
                }
                _ => merged.push(d),
            }
        }
        Ok(Self {
            dim,
            times,
            values,
            diracs: merged,
        })
    }

    /// Scalar signal sampled from `f` on a uniform grid of `steps` intervals.
    pub fn from_fn(
        horizon: f64,
        steps: usize,
        f: impl Fn(f64) -> f64,
        diracs: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(Error::domain(
                "from_fn needs a positive horizon and step count",
            ));
        }
        let times: Vec<f64> = (0..=steps)
            .map(|k| horizon * k as f64 / steps as f64)
            .collect();
        let values = times.iter().map(|&t| f(t)).collect();
        let diracs = diracs
            .into_iter()
            .map(|(time, w)| Dirac {
                time,
                weight: vec![w],
            })
            .collect();
        Self::new(1, times, values, diracs)
    }

    /// Pure Dirac train on `[0, horizon]`.
    pub fn from_diracs(horizon: f64, diracs: Vec<(f64, f64)>) -> Result<Self> {
        Self::from_fn(horizon, 1, |_| 0.0, diracs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn diracs(&self) -> &[Dirac] {
        &self.diracs
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            times: self.times.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            diracs: self
                .diracs
                .iter()
                .map(|d| Dirac {
                    time: d.time,
                    weight: d.weight.iter().map(|w| a * w).collect(),
                })
                .collect(),
        }
    }

    /// Sum of two signals sampled on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.times != other.times {
            return Err(Error::domain(
                "spiking signals must share dimension and sample grid to be added",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let diracs = self.diracs.iter().chain(&other.diracs).cloned().collect();
        Self::new(self.dim, self.times.clone(), values, diracs)
    }

    /// `∫₀ᵗ v`, right-continuous at Dirac times.
    pub fn running_integral(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(Error::OutOfRange(format!(
                "running_integral: t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        let mut acc = self.lebesgue_integral(t);
        for d in self.diracs.iter().take_while(|d| d.time <= t) {
            for (a, w) in acc.iter_mut().zip(&d.weight) {
                *a += w;
            }
        }
        Ok(acc)
    }

    fn lebesgue_integral(&self, t: f64) -> Vec<f64> {
        let dim = self.dim;
        let mut acc = vec![0.0; dim];
        for k in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            if t0 >= t {
                break;
            }
            let (v0, v1) = (self.value(k), self.value(k + 1));
            let upper = t1.min(t);
            let width = upper - t0;
            if width <= 0.0 {
                continue;
            }
            let frac = width / (t1 - t0);
            for i in 0..dim {
                let vu = v0[i] + frac * (v1[i] - v0[i]);
                acc[i] += 0.5 * width * (v0[i] + vu);
            }
        }
        acc
    }

    /// Running integral at every sample index. A Dirac at `τ` is counted at
    /// sample `k` when `t_k > τ`, or when `t_k = τ` and `k` is the last
    /// sample with that time (the post-jump value).
    pub fn running_integral_samples(&self) -> Vec<Vec<f64>> {
        let n = self.times.len();
        let dim = self.dim;
        let mut lebesgue = vec![0.0; dim];
        let mut dirac_sum = vec![0.0; dim];
        let mut next_dirac = 0;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                let w = self.times[k] - self.times[k - 1];
                let (v0, v1) = (self.value(k - 1), self.value(k));
                for i in 0..dim {
                    lebesgue[i] += 0.5 * w * (v0[i] + v1[i]);
                }
            }
            let t = self.times[k];
            let last_at_t = k + 1 == n || self.times[k + 1] > t;
            while let Some(d) = self.diracs.get(next_dirac) {
                if d.time < t || (d.time == t && last_at_t) {
                    for (a, w) in dirac_sum.iter_mut().zip(&d.weight) {
                        *a += w;
                    }
                    next_dirac += 1;
                } else {
                    break;
                }
            }
            out.push(
                lebesgue
                    .iter()
                    .zip(&dirac_sum)
                    .map(|(a, b)| a + b)
                    .collect(),
            );
        }
        out
    }

    /// `‖v‖⋆ = sup_t |∫₀ᵗ v|`, exact for the piecewise-linear sampled part:
    /// both one-sided values at every Dirac and every interior extremum
    /// between events are included.
    pub fn star_norm(&self) -> f64 {
        let dim = self.dim;
        let mut acc = vec![0.0; dim];
        let mut best: f64 = 0.0;
        let mut di = 0;
        let mut apply_through = |t: f64, acc: &mut [f64], di: &mut usize, best: &mut f64| {
            while let Some(d) = self.diracs.get(*di).filter(|d| d.time <= t) {
                for (a, w) in acc.iter_mut().zip(&d.weight) {
                    *a += w;
                }
                *best = best.max(euclid(acc));
                *di += 1;
            }
        };
        apply_through(self.times[0], &mut acc, &mut di, &mut best);
        let mut va = vec![0.0; dim];
        let mut slope = vec![0.0; dim];
        for k in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            if t1 == t0 {
                continue;
            }
            let (v0, v1) = (self.value(k), self.value(k + 1));
            for i in 0..dim {
                slope[i] = (v1[i] - v0[i]) / (t1 - t0);
            }
            let mut a = t0;
            loop {
                let next = self.diracs.get(di).map_or(t1, |d| d.time.min(t1));
                for i in 0..dim {
                    va[i] = v0[i] + slope[i] * (a - t0);
                }
                best = best.max(piece_sup(&mut acc, &va, &slope, next - a));
                a = next;
                apply_through(a, &mut acc, &mut di, &mut best);
                if a >= t1 {
                    break;
                }
            }
        }
        best
    }
}

/// Sup of `|J + va·s + slope·s²/2|` over `s ∈ [0, w]`; advances `acc` to `s = w`.
fn piece_sup(acc: &mut [f64], va: &[f64], slope: &[f64], w: f64) -> f64 {
    let at = |s: f64| -> f64 {
        acc.iter()
            .zip(va)
            .zip(slope)
            .map(|((j, v), m)| {
                let x = j + v * s + 0.5 * m * s * s;
                x * x
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut best = at(0.0).max(at(w));
    // d/ds |I|²/2 = I·I' is a cubic in s
    let mut c = [0.0; 4];
    for ((j, v), m) in acc.iter().zip(va).zip(slope) {
        c[0] += j * v;
        c[1] += v * v + j * m;
        c[2] += 1.5 * v * m;
        c[3] += 0.5 * m * m;
    }
    for s in cubic_roots_in(c, w) {
        best = best.max(at(s));
    }
    for ((j, v), m) in acc.iter_mut().zip(va).zip(slope) {
        *j += v * w + 0.5 * m * w * w;
    }
    best
}

/// Real roots of `c₀ + c₁s + c₂s² + c₃s³` inside `(0, w)`, by bisection on
/// the monotone pieces between the cubic's own turning points.
fn cubic_roots_in(c: [f64; 4], w: f64) -> Vec<f64> {
    let p = |s: f64| c[0] + s * (c[1] + s * (c[2] + s * c[3]));
    let mut cuts = vec![0.0, w];
    // turning points: c₁ + 2c₂s + 3c₃s² = 0
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let r = disc.sqrt();
            cuts.push((-qb - r) / (2.0 * qa));
            cuts.push((-qb + r) / (2.0 * qa));
        }
    } else if qb != 0.0 {
        cuts.push(-qc / qb);
    }
    cuts.retain(|s| s.is_finite() && *s >= 0.0 && *s <= w);
    cuts.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for win in cuts.windows(2) {
        let (mut lo, mut hi) = (win[0], win[1]);
        let (plo, phi) = (p(lo), p(hi));
        if plo == 0.0 {
            roots.push(lo);
            continue;
        }
        if plo.signum() == phi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if p(mid).signum() == plo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
