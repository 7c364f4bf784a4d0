//! Scenario files (TOML) and the built-in presets.
//!
//! ```toml
//! schema_version = 1
//!
//! [plant]
//! A = [[1.0]]
//! B = [[-1.0]]
//! C = [[1.0]]
//!
//! [controller]
//! kind = "siso_pair"        # siso_pair | mimo_grid | mimo_rowgain | pwa
//! K = 2.0
//! alpha1 = 0.1
//! alpha2 = 0.1
//!
//! [reference]
//! x0 = [1.0]
//!
//! [sim]
//! t_end = 5.0
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::certify::{verify, CertInputs, CertReport};
use crate::error::{Error, Result};
use crate::matrixkit::Matrix;
use crate::network::{
    build_mimo_grid, build_mimo_rowgain, build_pwa_network, build_siso_pair, ControllerNetwork,
    PwaFunction,
};
use crate::output::DEFAULT_PRECISION;
use crate::plant::{ClosedLoopReference, LtiPlant};
use crate::simulator::{
    emulation_metrics, replay, simulate, Emulated, EmulationTrace, SimConfig, SimResult,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum Numeric {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Deserialize, Debug)]
struct RawScenario {
    schema_version: Option<u32>,
    name: Option<String>,
    plant: Option<RawPlant>,
    controller: Option<RawController>,
    reference: Option<RawReference>,
    input: Option<InputSpec>,
    sim: Option<RawSim>,
    outputs: Option<RawOutputs>,
}

#[derive(Deserialize, Debug)]
#[allow(non_snake_case)]
struct RawPlant {
    A: Option<Vec<Vec<f64>>>,
    B: Option<Vec<Vec<f64>>>,
    C: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize, Debug)]
#[allow(non_snake_case)]
struct RawController {
    kind: Option<String>,
    K: Option<Numeric>,
    alpha1: Option<Numeric>,
    alpha2: Option<Numeric>,
    alpha: Option<Vec<f64>>,
    xi0: Option<Vec<f64>>,
    pwa: Option<PwaFunction>,
}

#[derive(Deserialize, Debug)]
struct RawReference {
    x0: Option<Vec<f64>>,
}

#[derive(Deserialize, Debug)]
struct RawSim {
    t_end: Option<f64>,
    base_step: Option<f64>,
    event_tol: Option<f64>,
    sample_stride: Option<usize>,
    merge_window: Option<f64>,
}

#[derive(Deserialize, Debug)]
struct RawOutputs {
    trajectory: Option<String>,
    spikes: Option<String>,
    report: Option<String>,
    precision: Option<usize>,
}

/// Test input `y(t) = offset + Σ a·sin(2π·f·t + φ)` for open-loop replays.
#[derive(Deserialize, Debug, Clone, PartialEq, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub components: Vec<SineComponent>,
}

#[derive(Deserialize, Debug, Clone, PartialEq, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct SineComponent {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl InputSpec {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset
            + self
                .components
                .iter()
                .map(|c| c.amplitude * (std::f64::consts::TAU * c.frequency * t + c.phase).sin())
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerSpec {
    SisoPair {
        k: f64,
        alpha1: f64,
        alpha2: f64,
    },
    MimoGrid {
        k: Matrix,
        alpha1: Matrix,
        alpha2: Matrix,
    },
    MimoRowgain {
        k: Matrix,
        alpha1: Vec<f64>,
        alpha2: Vec<f64>,
    },
    Pwa {
        g: PwaFunction,
        alpha: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub trajectory: String,
    pub spikes: String,
    pub report: String,
    pub precision: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            spikes: "spikes.csv".into(),
            report: "report.json".into(),
            precision: DEFAULT_PRECISION,
        }
    }
}

/// A validated scenario. Closed-loop scenarios carry a plant and `x0`;
/// PWA scenarios carry an input signal instead.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub plant: Option<LtiPlant>,
    pub controller: ControllerSpec,
    pub xi0: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    pub input: Option<InputSpec>,
    pub sim: SimConfig,
    pub outputs: OutputSpec,
}

impl Scenario {
    pub fn network(&self) -> Result<ControllerNetwork> {
        let net = match &self.controller {
            ControllerSpec::SisoPair { k, alpha1, alpha2 } => {
                build_siso_pair(*k, *alpha1, *alpha2)?
            }
            ControllerSpec::MimoGrid { k, alpha1, alpha2 } => build_mimo_grid(k, alpha1, alpha2)?,
            ControllerSpec::MimoRowgain { k, alpha1, alpha2 } => {
                build_mimo_rowgain(k, alpha1, alpha2)?
            }
            ControllerSpec::Pwa { g, alpha } => build_pwa_network(g, alpha)?,
        };
        match &self.xi0 {
            Some(xi0) => net.with_initial_states(xi0),
            None => Ok(net),
        }
    }

    /// The linear gain a closed-loop controller emulates.
    pub fn gain(&self) -> Option<Matrix> {
        match &self.controller {
            ControllerSpec::SisoPair { k, .. } => Some(Matrix::scalar(*k)),
            ControllerSpec::MimoGrid { k, .. } | ControllerSpec::MimoRowgain { k, .. } => {
                Some(k.clone())
            }
            ControllerSpec::Pwa { .. } => None,
        }
    }

    pub fn pwa(&self) -> Option<&PwaFunction> {
        match &self.controller {
            ControllerSpec::Pwa { g, .. } => Some(g),
            _ => None,
        }
    }

    pub fn emulated<'a>(&'a self, gain: &'a Option<Matrix>) -> Emulated<'a> {
        match (gain, self.pwa()) {
            (Some(k), _) => Emulated::Linear(k),
            (None, Some(g)) => Emulated::Pwa(g),
            (None, None) => unreachable!("every controller emulates a gain or a PWA map"),
        }
    }

    pub fn reference(&self) -> Result<ClosedLoopReference> {
        let (plant, x0, k) = match (&self.plant, &self.x0, self.gain()) {
            (Some(p), Some(x0), Some(k)) => (p, x0, k),
            _ => {
                return Err(Error::domain(
                    "scenario has no closed loop (plant, gain and reference.x0)",
                ))
            }
        };
        ClosedLoopReference::for_feedback(plant, &k, x0.clone())
    }

    pub fn is_closed_loop(&self) -> bool {
        self.plant.is_some()
    }
}

/// A finished run with its metrics and verification report.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub sim: SimResult,
    pub trace: EmulationTrace,
    pub report: CertReport,
}

/// Runs a scenario: closed loop against its plant, or open-loop replay of
/// `[input]` for PWA controllers.
pub fn execute(s: &Scenario) -> Result<Outcome> {
    let net = s.network()?;
    let gain = s.gain();
    let (sim, inputs) = match &s.plant {
        Some(plant) => {
            let reference = s.reference()?;
            let sim = simulate(plant, &net, &reference, &s.sim)?;
            (sim, CertInputs::for_loop(plant, &reference, &net)?)
        }
        None => {
            let input = s
                .input
                .as_ref()
                .ok_or_else(|| Error::domain("scenario has neither plant nor input"))?;
            let sim = replay(&net, |t| vec![input.eval(t)], &s.sim)?;
            (sim, CertInputs::for_signal(&net))
        }
    };
    let trace = emulation_metrics(&sim, s.emulated(&gain), &net)?;
    let report = verify(&sim, &trace, &inputs);
    Ok(Outcome { sim, trace, report })
}

/// Parses and validates a scenario, rejecting unknown keys.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_with(text, true).map(|(s, _)| s)
}

/// Parses a scenario. Unknown keys are errors when `strict`, otherwise
/// they are returned as warnings.
pub fn parse_scenario_with(text: &str, strict: bool) -> Result<(Scenario, Vec<String>)> {
    let de =
        toml::Deserializer::parse(text).map_err(|e| Error::domain(format!("scenario: {e}")))?;
    let mut unknown = Vec::new();
    let raw: RawScenario = serde_ignored::deserialize(de, |path| {
        unknown.push(path.to_string().replace(".?", "").replace("?.", ""))
    })
    .map_err(|e| Error::domain(format!("scenario: {e}")))?;
    if strict {
        if let Some(key) = unknown.first() {
            return Err(Error::domain(format!("{key}: unknown key")));
        }
    }
    let warnings = unknown
        .into_iter()
        .map(|k| format!("{k}: unknown key ignored"))
        .collect();
    Ok((validate(raw)?, warnings))
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::domain(format!("{key}: {msg}"))
}

fn missing(key: &str) -> Error {
    bad(key, "missing")
}

fn matrix(key: &str, rows: Vec<Vec<f64>>) -> Result<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(bad(key, "empty matrix"));
    }
    Matrix::from_rows(&rows).map_err(|e| bad(key, e))
}

fn numeric_matrix(key: &str, v: Numeric) -> Result<Matrix> {
    match v {
        Numeric::Scalar(x) => matrix(key, vec![vec![x]]),
        Numeric::Vector(_) => Err(bad(key, "expected a matrix (array of rows)")),
        Numeric::Matrix(m) => matrix(key, m),
    }
}

fn numeric_scalar(key: &str, v: Numeric) -> Result<f64> {
    match v {
        Numeric::Scalar(x) => Ok(x),
        Numeric::Vector(v) if v.len() == 1 => Ok(v[0]),
        Numeric::Matrix(m) if m.len() == 1 && m[0].len() == 1 => Ok(m[0][0]),
        _ => Err(bad(key, "expected a scalar")),
    }
}

fn numeric_vector(key: &str, v: Numeric) -> Result<Vec<f64>> {
    match v {
        Numeric::Scalar(x) => Ok(vec![x]),
        Numeric::Vector(v) => Ok(v),
        Numeric::Matrix(_) => Err(bad(key, "expected a vector")),
    }
}

fn positive_all(key: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(i) => Err(bad(
            &format!("{key}[{i}]"),
            format!("must be positive, got {}", values[i]),
        )),
        None => Ok(()),
    }
}

fn validate(raw: RawScenario) -> Result<Scenario> {
    match raw.schema_version {
        None => return Err(missing("schema_version")),
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(bad(
                "schema_version",
                format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
            ))
        }
    }

    let plant = match raw.plant {
        Some(p) => {
            let a = matrix("plant.A", p.A.ok_or_else(|| missing("plant.A"))?)?;
            let b = matrix("plant.B", p.B.ok_or_else(|| missing("plant.B"))?)?;
            let c = matrix("plant.C", p.C.ok_or_else(|| missing("plant.C"))?)?;
            if !a.is_square() {
                return Err(bad(
                    "plant.A",
                    format!("must be square, got {}x{}", a.rows(), a.cols()),
                ));
            }
            if b.rows() != a.rows() {
                return Err(bad(
                    "plant.B",
                    format!("expected {} rows, got {}x{}", a.rows(), b.rows(), b.cols()),
                ));
            }
            if c.cols() != a.rows() {
                return Err(bad(
                    "plant.C",
                    format!(
                        "expected {} columns, got {}x{}",
                        a.rows(),
                        c.rows(),
                        c.cols()
                    ),
                ));
            }
            Some(LtiPlant::new(a, b, c)?)
        }
        None => None,
    };

    let rc = raw.controller.ok_or_else(|| missing("controller"))?;
    let kind = rc.kind.ok_or_else(|| missing("controller.kind"))?;
    let take = |v: Option<Numeric>, key: &str| v.ok_or_else(|| missing(key));
    let controller = match kind.as_str() {
        "siso_pair" => {
            let k = numeric_scalar("controller.K", take(rc.K, "controller.K")?)?;
            let a1 = numeric_scalar("controller.alpha1", take(rc.alpha1, "controller.alpha1")?)?;
            let a2 = numeric_scalar("controller.alpha2", take(rc.alpha2, "controller.alpha2")?)?;
            if !(k > 0.0) {
                return Err(bad("controller.K", format!("must be positive, got {k}")));
            }
            positive_all("controller.alpha1", &[a1])?;
            positive_all("controller.alpha2", &[a2])?;
            ControllerSpec::SisoPair {
                k,
                alpha1: a1,
                alpha2: a2,
            }
        }
        "mimo_grid" => {
            let k = numeric_matrix("controller.K", take(rc.K, "controller.K")?)?;
            let a1 = numeric_matrix("controller.alpha1", take(rc.alpha1, "controller.alpha1")?)?;
            let a2 = numeric_matrix("controller.alpha2", take(rc.alpha2, "controller.alpha2")?)?;
            for (key, a) in [("controller.alpha1", &a1), ("controller.alpha2", &a2)] {
                if a.rows() != k.rows() || a.cols() != k.cols() {
                    return Err(bad(
                        key,
                        format!(
                            "expected shape {}x{}, got {}x{}",
                            k.rows(),
                            k.cols(),
                            a.rows(),
                            a.cols()
                        ),
                    ));
                }
                for i in 0..k.rows() {
                    for j in 0..k.cols() {
                        if k[(i, j)] != 0.0 && !(a[(i, j)] > 0.0) {
                            return Err(bad(
                                &format!("{key}[{i}][{j}]"),
                                format!("must be positive, got {}", a[(i, j)]),
                            ));
                        }
                    }
                }
            }
            ControllerSpec::MimoGrid {
                k,
                alpha1: a1,
                alpha2: a2,
            }
        }
        "mimo_rowgain" => {
            let k = numeric_matrix("controller.K", take(rc.K, "controller.K")?)?;
            let a1 = numeric_vector("controller.alpha1", take(rc.alpha1, "controller.alpha1")?)?;
            let a2 = numeric_vector("controller.alpha2", take(rc.alpha2, "controller.alpha2")?)?;
            for (key, a) in [("controller.alpha1", &a1), ("controller.alpha2", &a2)] {
                if a.len() != k.rows() {
                    return Err(bad(
                        key,
                        format!("expected {} entries, got {}", k.rows(), a.len()),
                    ));
                }
                positive_all(key, a)?;
            }
            ControllerSpec::MimoRowgain {
                k,
                alpha1: a1,
                alpha2: a2,
            }
        }
        "pwa" => {
            let g = rc.pwa.ok_or_else(|| missing("controller.pwa"))?;
            g.validate().map_err(|e| bad("controller.pwa", e))?;
            let alpha = rc.alpha.ok_or_else(|| missing("controller.alpha"))?;
            if alpha.len() != g.n() + 3 {
                return Err(bad(
                    "controller.alpha",
                    format!("expected {} entries, got {}", g.n() + 3, alpha.len()),
                ));
            }
            positive_all("controller.alpha", &alpha)?;
            ControllerSpec::Pwa { g, alpha }
        }
        other => {
            return Err(bad(
                "controller.kind",
                format!("unknown kind {other:?} (siso_pair, mimo_grid, mimo_rowgain, pwa)"),
            ))
        }
    };

    let x0 = raw.reference.and_then(|r| r.x0);
    let is_pwa = matches!(controller, ControllerSpec::Pwa { .. });
    if let Some(p) = &plant {
        if is_pwa {
            return Err(bad(
                "plant",
                "a pwa controller runs open loop against [input]; remove [plant]",
            ));
        }
        let k = match &controller {
            ControllerSpec::SisoPair { .. } => Matrix::scalar(1.0),
            ControllerSpec::MimoGrid { k, .. } | ControllerSpec::MimoRowgain { k, .. } => k.clone(),
            ControllerSpec::Pwa { .. } => unreachable!(),
        };
        if k.rows() != p.nu() || k.cols() != p.ny() {
            return Err(bad(
                "controller.K",
                format!(
                    "expected shape {}x{} (nu x ny), got {}x{}",
                    p.nu(),
                    p.ny(),
                    k.rows(),
                    k.cols()
                ),
            ));
        }
        let x0 = x0.as_ref().ok_or_else(|| missing("reference.x0"))?;
        if x0.len() != p.nx() {
            return Err(bad(
                "reference.x0",
                format!("expected {} entries, got {}", p.nx(), x0.len()),
            ));
        }
    } else if !is_pwa {
        return Err(missing("plant"));
    }
    let input = raw.input;
    if is_pwa && input.is_none() {
        return Err(missing("input"));
    }

    let rs = raw.sim.ok_or_else(|| missing("sim"))?;
    let mut sim = SimConfig::new(rs.t_end.ok_or_else(|| missing("sim.t_end"))?);
    if let Some(h) = rs.base_step {
        sim.base_step = h;
    }
    if let Some(v) = rs.event_tol {
        sim.event_tol = v;
    }
    if let Some(v) = rs.sample_stride {
        sim.sample_stride = v;
    }
    sim.merge_window = rs.merge_window.unwrap_or(sim.event_tol);
    sim.validate().map_err(|e| bad("sim", e))?;

    let mut outputs = OutputSpec::default();
    if let Some(o) = raw.outputs {
        if let Some(v) = o.trajectory {
            outputs.trajectory = v;
        }
        if let Some(v) = o.spikes {
            outputs.spikes = v;
        }
        if let Some(v) = o.report {
            outputs.report = v;
        }
        if let Some(v) = o.precision {
            if !(1..=17).contains(&v) {
                return Err(bad(
                    "outputs.precision",
                    format!("must lie in 1..=17, got {v}"),
                ));
            }
            outputs.precision = v;
        }
    }

    let scenario = Scenario {
        name: raw.name,
        plant,
        controller,
        xi0: rc.xi0,
        x0,
        input,
        sim,
        outputs,
    };
    // neuron count and ξ(0) ranges are checked by building once
    scenario.network().map_err(|e| bad("controller", e))?;
    if scenario.is_closed_loop() {
        scenario
            .reference()
            .map_err(|e| bad("controller.K", format!("closed loop A + BKC: {e}")))?;
    }
    Ok(scenario)
}

pub const PRESETS: [&str; 6] = [
    "batch-reactor-I",
    "batch-reactor-II",
    "batch-reactor-III",
    "batch-reactor-rest",
    "scalar-demo",
    "pwa-abs",
];

const BATCH_REACTOR_PLANT: &str = r#"
[plant]
A = [[1.38, -0.2077, 6.715, -5.676],
     [-0.5814, -4.29, 0.0, 0.675],
     [1.067, 4.273, -6.654, 5.893],
     [0.048, 4.273, 1.343, -2.104]]
B = [[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]]
C = [[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]]
"#;

fn batch_reactor(name: &str, divisor: f64, x0: &str) -> String {
    let a = |v: f64| v / 25.0 / divisor;
    let alpha = format!("[[{}, {}], [{}, {}]]", a(1.0), a(4.0), a(3.0), a(0.3));
    format!(
        r#"schema_version = 1
name = "{name}"
{BATCH_REACTOR_PLANT}
[controller]
kind = "mimo_grid"
K = [[-0.5, -2.0], [5.0, 0.5]]
alpha1 = {alpha}
alpha2 = {alpha}
xi0 = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

[reference]
x0 = {x0}

[sim]
t_end = 10.0
base_step = 1e-4
event_tol = 1e-9
"#
    )
}

/// TOML text of a built-in scenario.
pub fn preset_toml(name: &str) -> Option<String> {
    let x0 = "[5.51, 7.08, 2.91, 5.11]";
    Some(match name {
        "batch-reactor-I" => batch_reactor(name, 1.0, x0),
        "batch-reactor-II" => batch_reactor(name, 4.0, x0),
        "batch-reactor-III" => batch_reactor(name, 15.0, x0),
        "batch-reactor-rest" => batch_reactor(name, 1.0, "[0.0, 0.0, 0.0, 0.0]"),
        "scalar-demo" => r#"schema_version = 1
name = "scalar-demo"

[plant]
A = [[1.0]]
B = [[-1.0]]
C = [[1.0]]

[controller]
kind = "siso_pair"
K = 2.0
alpha1 = 0.1
alpha2 = 0.1

[reference]
x0 = [1.0]

[sim]
t_end = 5.0
"#
        .to_string(),
        "pwa-abs" => r#"schema_version = 1
name = "pwa-abs"

[controller]
kind = "pwa"
alpha = [0.1, 0.1, 0.1, 0.1]
pwa = { c = 0.0, breakpoints = [0.0], slopes = [-1.0, 1.0] }

[input]
components = [{ amplitude = 2.0, frequency = 0.5 }]

[sim]
t_end = 4.0
"#
        .to_string(),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Option<Scenario> {
    preset_toml(name).map(|t| parse_scenario(&t).expect("built-in presets are valid"))
}

/// Every preset by name, parsed.
pub fn all_presets() -> BTreeMap<&'static str, Scenario> {
    PRESETS
        .iter()
        .map(|&n| (n, preset(n).expect("listed preset")))
        .collect()
}
