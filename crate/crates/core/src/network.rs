//! Controller networks: the two-neuron SISO pair, the MIMO grid, the
//! row-gain variant, and the piecewise-affine emulator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrixkit::Matrix;
use crate::neuron::{IafNeuron, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    SisoPair,
    MimoGrid,
    MimoRowgain,
    Pwa,
}

/// Where a neuron sits in its construction. `ell` is 1 for the
/// positive-orientation neuron of a pair and 2 for the negative one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "role")]
pub enum NeuronRole {
    Pair {
        ell: u8,
    },
    Grid {
        ell: u8,
        i: usize,
        j: usize,
    },
    Row {
        ell: u8,
        i: usize,
    },
    /// Neuron `i` of the PWA network; `N+1` and `N+2` are the constant neurons.
    Pwa {
        i: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerNetwork {
    kind: NetworkKind,
    neurons: Vec<IafNeuron>,
    channels: Vec<usize>,
    roles: Vec<NeuronRole>,
    n_channels: usize,
    n_inputs: usize,
}

impl ControllerNetwork {
    fn empty(kind: NetworkKind, n_channels: usize, n_inputs: usize) -> Self {
        Self {
            kind,
            neurons: Vec::new(),
            channels: Vec::new(),
            roles: Vec::new(),
            n_channels,
            n_inputs,
        }
    }

    fn push(&mut self, neuron: IafNeuron, channel: usize, role: NeuronRole) {
        self.neurons.push(neuron);
        self.channels.push(channel);
        self.roles.push(role);
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn neurons(&self) -> &[IafNeuron] {
        &self.neurons
    }

    pub(crate) fn neurons_mut(&mut self) -> &mut [IafNeuron] {
        &mut self.neurons
    }

    pub fn neuron(&self, id: usize) -> &IafNeuron {
        &self.neurons[id]
    }

    pub fn channel(&self, id: usize) -> usize {
        self.channels[id]
    }

    pub fn role(&self, id: usize) -> NeuronRole {
        self.roles[id]
    }

    /// Number of control channels the network drives.
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Length of the input vector each neuron reads.
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Sets every neuron's `ξ(0)`; each value must lie in `[0, Δ)`.
    pub fn with_initial_states(mut self, xi0: &[f64]) -> Result<Self> {
        if xi0.len() != self.neurons.len() {
            return Err(Error::dim(
                "with_initial_states",
                format!("{} states", self.neurons.len()),
                xi0.len(),
            ));
        }
        for (n, &x) in self.neurons.iter_mut().zip(xi0) {
            n.set_state(x)?;
        }
        Ok(self)
    }

    pub fn states(&self) -> Vec<f64> {
        self.neurons.iter().map(IafNeuron::state).collect()
    }

    pub fn all_states_zero(&self) -> bool {
        self.neurons.iter().all(|n| n.state() == 0.0)
    }

    /// Sum of amplitudes feeding each channel.
    pub fn channel_amplitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_channels];
        for (n, &c) in self.neurons.iter().zip(&self.channels) {
            out[c] += n.amplitude();
        }
        out
    }

    /// Ids of the neurons feeding `channel`.
    pub fn channel_members(&self, channel: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&id| self.channels[id] == channel)
            .collect()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

fn unit_row(len: usize, j: usize) -> Vec<f64> {
    let mut w = vec![0.0; len];
    w[j] = 1.0;
    w
}

/// Two neurons with `Δ_ℓ = α_ℓ/K` feeding channel 0.
pub fn build_siso_pair(k: f64, alpha1: f64, alpha2: f64) -> Result<ControllerNetwork> {
    positive("K", k)?;
    positive("alpha1", alpha1)?;
    positive("alpha2", alpha2)?;
    let mut net = ControllerNetwork::empty(NetworkKind::SisoPair, 1, 1);
    let n1 = IafNeuron::new(alpha1 / k, alpha1, Sign::Plus, Sign::Plus, 0.0, vec![1.0])?;
    let n2 = IafNeuron::new(alpha2 / k, alpha2, Sign::Minus, Sign::Minus, 0.0, vec![1.0])?;
    net.push(n1, 0, NeuronRole::Pair { ell: 1 });
    net.push(n2, 0, NeuronRole::Pair { ell: 2 });
    Ok(net)
}

/// One neuron pair per nonzero `K_ij`, reading output `j` and feeding
/// channel `i`. Negative gains flip both emitted signs.
pub fn build_mimo_grid(k: &Matrix, alpha1: &Matrix, alpha2: &Matrix) -> Result<ControllerNetwork> {
    let (nu, ny) = (k.rows(), k.cols());
    for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
        if a.rows() != nu || a.cols() != ny {
            return Err(Error::dim(
                "build_mimo_grid",
                format!("{name} of shape {nu}x{ny}"),
                format!("{}x{}", a.rows(), a.cols()),
            ));
        }
    }
    let mut net = ControllerNetwork::empty(NetworkKind::MimoGrid, nu, ny);
    for i in 0..nu {
        for j in 0..ny {
            let Some(s) = Sign::of(k[(i, j)]) else {
                continue;
            };
            let g = k[(i, j)].abs();
            let (a1, a2) = (alpha1[(i, j)], alpha2[(i, j)]);
            positive(&format!("alpha1[{i}][{j}]"), a1)?;
            positive(&format!("alpha2[{i}][{j}]"), a2)?;
            let n1 = IafNeuron::new(a1 / g, a1, s, Sign::Plus, 0.0, unit_row(ny, j))?;
            let n2 = IafNeuron::new(a2 / g, a2, s.flip(), Sign::Minus, 0.0, unit_row(ny, j))?;
            net.push(n1, i, NeuronRole::Grid { ell: 1, i, j });
            net.push(n2, i, NeuronRole::Grid { ell: 2, i, j });
        }
    }
    if net.is_empty() {
        return Err(Error::domain("gain matrix is all zero: empty network"));
    }
    Ok(net)
}

/// Two unit-gain neurons per channel `i`, each reading `K_i•·y`.
pub fn build_mimo_rowgain(k: &Matrix, alpha1: &[f64], alpha2: &[f64]) -> Result<ControllerNetwork> {
    let (nu, ny) = (k.rows(), k.cols());
    for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
        if a.len() != nu {
            return Err(Error::dim(
                "build_mimo_rowgain",
                format!("{name} of length {nu}"),
                a.len(),
            ));
        }
    }
    let mut net = ControllerNetwork::empty(NetworkKind::MimoRowgain, nu, ny);
    for i in 0..nu {
        let row = k.row(i).to_vec();
        if row.iter().all(|&v| v == 0.0) {
            return Err(Error::domain(format!("row {i} of K is zero")));
        }
        positive(&format!("alpha1[{i}]"), alpha1[i])?;
        positive(&format!("alpha2[{i}]"), alpha2[i])?;
        let n1 = IafNeuron::new(
            alpha1[i],
            alpha1[i],
            Sign::Plus,
            Sign::Plus,
            0.0,
            row.clone(),
        )?;
        let n2 = IafNeuron::new(alpha2[i], alpha2[i], Sign::Minus, Sign::Minus, 0.0, row)?;
        net.push(n1, i, NeuronRole::Row { ell: 1, i });
        net.push(n2, i, NeuronRole::Row { ell: 2, i });
    }
    Ok(net)
}

/// Continuous piecewise-affine scalar map
/// `g(y) = c − K₀·max{0, b₁−y} + K₁·max{0, y−b₁} + Σ_{i≥2} (K_i−K_{i−1})·max{0, y−b_i}`.
///
/// `c` is the value at `b₁`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PwaFunction {
    pub c: f64,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PwaFunction {
    pub fn new(c: f64, breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let g = Self {
            c,
            breakpoints,
            slopes,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.breakpoints.len();
        if n == 0 {
            return Err(Error::domain("PWA function needs at least one breakpoint"));
        }
        if self.slopes.len() != n + 1 {
            return Err(Error::dim(
                "PwaFunction",
                format!("{} slopes", n + 1),
                self.slopes.len(),
            ));
        }
        if !self.c.is_finite()
            || self
                .breakpoints
                .iter()
                .chain(&self.slopes)
                .any(|v| !v.is_finite())
        {
            return Err(Error::domain("PWA parameters must be finite"));
        }
        if self.breakpoints.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("PWA breakpoints must be non-decreasing"));
        }
        if n >= 2 && self.breakpoints[0] >= self.breakpoints[n - 1] {
            return Err(Error::domain("PWA breakpoints must satisfy b1 < bN"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.breakpoints.len()
    }

    /// `K̄₀ = K₀`, `K̄₁ = K₁`, `K̄_i = K_i − K_{i−1}` for `i ≥ 2`.
    pub fn kbar(&self) -> Vec<f64> {
        (0..=self.n())
            .map(|i| {
                if i < 2 {
                    self.slopes[i]
                } else {
                    self.slopes[i] - self.slopes[i - 1]
                }
            })
            .collect()
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Sum of rectified terms, exactly as the PWA form is written.
pub fn pwa_eval(g: &PwaFunction, y: f64) -> f64 {
    let kbar = g.kbar();
    let b = &g.breakpoints;
    let mut v = g.c - kbar[0] * (b[0] - y).max(0.0);
    for i in 1..=g.n() {
        v += kbar[i] * (y - b[i - 1]).max(0.0);
    }
    v
}

/// The `N+3`-neuron PWA emulator on one channel. `alpha` has `N+3` entries;
/// neurons whose `K̄_i` vanishes are left out.
pub fn build_pwa_network(g: &PwaFunction, alpha: &[f64]) -> Result<ControllerNetwork> {
    g.validate()?;
    let n = g.n();
    if alpha.len() != n + 3 {
        return Err(Error::dim(
            "build_pwa_network",
            format!("{} amplitudes", n + 3),
            alpha.len(),
        ));
    }
    for (i, &a) in alpha.iter().enumerate() {
        positive(&format!("alpha[{i}]"), a)?;
    }
    let kbar = g.kbar();
    let mut net = ControllerNetwork::empty(NetworkKind::Pwa, 1, 1);
    if let Some(s) = Sign::of(kbar[0]) {
        let nr = IafNeuron::new(
            alpha[0] / kbar[0].abs(),
            alpha[0],
            s.flip(),
            Sign::Minus,
            g.breakpoints[0],
            vec![1.0],
        )?;
        net.push(nr, 0, NeuronRole::Pwa { i: 0 });
    }
    for i in 1..=n {
        if let Some(s) = Sign::of(kbar[i]) {
            let nr = IafNeuron::new(
                alpha[i] / kbar[i].abs(),
                alpha[i],
                s,
                Sign::Plus,
                g.breakpoints[i - 1],
                vec![1.0],
            )?;
            net.push(nr, 0, NeuronRole::Pwa { i });
        }
    }
    // constant neurons: zero weight, bias −c
    let plus = IafNeuron::new(
        alpha[n + 1],
        alpha[n + 1],
        Sign::Plus,
        Sign::Plus,
        -g.c,
        vec![0.0],
    )?;
    let minus = IafNeuron::new(
        alpha[n + 2],
        alpha[n + 2],
        Sign::Minus,
        Sign::Minus,
        -g.c,
        vec![0.0],
    )?;
    net.push(plus, 0, NeuronRole::Pwa { i: n + 1 });
    net.push(minus, 0, NeuronRole::Pwa { i: n + 2 });
    Ok(net)
}
