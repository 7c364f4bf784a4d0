use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spikeloop::certify::CertReport;
use spikeloop::matrixkit::{hurwitz_envelope, isiss_gain};
use spikeloop::output::{fmt_sig, spikes_csv, trajectory_csv, write_atomic};
use spikeloop::scenario::{execute, parse_scenario_with, preset_toml, Outcome, Scenario, PRESETS};
use spikeloop::simulator::SimStatus;
use spikeloop::{Error, Matrix};

#[derive(Parser)]
#[command(
    name = "spikeloop",
    version,
    about = "Spiking integrate-and-fire controllers for LTI plants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory and spike CSVs.
    Simulate(RunArgs),
    /// Simulate, then verify every bound and write the JSON report.
    Certify(RunArgs),
    /// Print the loop gain and a decay envelope for dz/dt = F z + G u.
    Gain(GainArgs),
    /// Replay a PWA network against its input signal and check the emulation bound.
    PwaApprox(RunArgs),
    /// Run batch-reactor controllers I, II and III and print the comparison.
    Table1(TableArgs),
}

#[derive(Args, Clone)]
struct Overrides {
    /// Base integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Simulation horizon in seconds.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Directory for output files (default: current directory).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// Reject unknown keys instead of warning about them.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct GainArgs {
    /// State matrix as JSON, e.g. `[[-1]]` or `-1`.
    #[arg(long, requires = "g", allow_hyphen_values = true)]
    f: Option<String>,
    /// Input matrix as JSON.
    #[arg(long, requires = "f", allow_hyphen_values = true)]
    g: Option<String>,
    /// Use the closed loop (A + BKC, B) of a scenario instead.
    #[arg(long, conflicts_with_all = ["f", "preset"])]
    scenario: Option<PathBuf>,
    #[arg(long, conflicts_with = "f")]
    preset: Option<String>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    overrides: Overrides,
}

enum Failure {
    Validation(String),
    Guard(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Convergence { .. } => Failure::Other(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run(&a, false),
        Command::Certify(a) => run(&a, true),
        Command::PwaApprox(a) => pwa_approx(&a),
        Command::Gain(a) => gain(&a),
        Command::Table1(a) => table1(&a.overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(
    scenario: &Option<PathBuf>,
    preset: &Option<String>,
    strict: bool,
) -> Result<Scenario, Failure> {
    let text = match (scenario, preset) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => preset_toml(name).ok_or_else(|| {
            Failure::Validation(format!(
                "unknown preset {name:?} (available: {})",
                PRESETS.join(", ")
            ))
        })?,
        (None, None) => return Err(Failure::Validation("pass --scenario or --preset".into())),
    };
    let (scenario, warnings) = parse_scenario_with(&text, strict)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(scenario)
}

fn apply(mut s: Scenario, o: &Overrides) -> Result<Scenario, Failure> {
    if let Some(h) = o.step {
        s.sim.base_step = h;
    }
    if let Some(t) = o.t_end {
        s.sim.t_end = t;
    }
    s.sim.validate()?;
    Ok(s)
}

fn out_path(o: &Overrides, name: &str) -> PathBuf {
    match &o.out_dir {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

fn guard(status: &SimStatus) -> Result<(), Failure> {
    match status {
        SimStatus::Completed => Ok(()),
        SimStatus::ZenoGuardTripped {
            neuron_id,
            time,
            gap,
            limit,
        } => Err(Failure::Guard(format!(
            "Zeno guard tripped: neuron {neuron_id} at t = {time}, gap {gap:e} < {limit:e}"
        ))),
    }
}

fn write_outputs(
    s: &Scenario,
    o: &Overrides,
    out: &Outcome,
    with_report: bool,
) -> Result<(), Failure> {
    let p = s.outputs.precision;
    write_atomic(
        &out_path(o, &s.outputs.trajectory),
        &trajectory_csv(&out.sim, p),
    )?;
    write_atomic(
        &out_path(o, &s.outputs.spikes),
        &spikes_csv(&out.sim.spikes, p),
    )?;
    if with_report {
        write_report(&out_path(o, &s.outputs.report), &out.report)?;
    }
    Ok(())
}

fn write_report(path: &Path, report: &CertReport) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Failure::Other(e.to_string()))?;
    write_atomic(path, &(json + "\n"))?;
    Ok(())
}

fn run(a: &RunArgs, certify: bool) -> Result<(), Failure> {
    let s = apply(load(&a.scenario, &a.preset, a.strict)?, &a.overrides)?;
    let out = execute(&s)?;
    // partial files are still useful when the guard trips
    write_outputs(&s, &a.overrides, &out, certify)?;
    guard(&out.sim.status)?;
    let r = &out.report;
    println!("spikes {}", out.sim.spike_count());
    if let Some(x) = r.achieved.max_xtilde {
        println!("max |xtilde| {}", fmt_sig(x, 6));
    }
    if certify {
        println!(
            "e_star {} (bound {})",
            fmt_sig(r.achieved.e_star, 6),
            fmt_sig(r.e_star_bound, 6)
        );
        if let Some(b) = r.xtilde_bound {
            println!("xtilde bound {}", fmt_sig(b, 6));
        }
        println!("pass {}", r.pass);
    }
    Ok(())
}

fn pwa_approx(a: &RunArgs) -> Result<(), Failure> {
    let s = apply(load(&a.scenario, &a.preset, a.strict)?, &a.overrides)?;
    if s.pwa().is_none() {
        return Err(Failure::Validation(
            "controller.kind: pwa-approx needs a pwa controller".into(),
        ));
    }
    let out = execute(&s)?;
    let p = s.outputs.precision;
    write_atomic(
        &out_path(&a.overrides, &s.outputs.spikes),
        &spikes_csv(&out.sim.spikes, p),
    )?;
    write_report(&out_path(&a.overrides, &s.outputs.report), &out.report)?;
    guard(&out.sim.status)?;
    let r = &out.report;
    println!("spikes {}", out.sim.spike_count());
    println!(
        "sup |int(g(y) - u)| {} <= sum alpha {} : {}",
        fmt_sig(r.achieved.e_star, 6),
        fmt_sig(r.e_star_bound, 6),
        r.check("e_star").is_some_and(|c| c.pass)
    );
    println!("pass {}", r.pass);
    Ok(())
}

fn json_matrix(flag: &str, text: &str) -> Result<Matrix, Failure> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Failure::Validation(format!("--{flag}: {e}")))?;
    let rows: Vec<Vec<f64>> = match v {
        serde_json::Value::Number(n) => vec![vec![n.as_f64().unwrap_or(f64::NAN)]],
        other => serde_json::from_value(other).map_err(|e| {
            Failure::Validation(format!("--{flag}: expected a number or array of rows: {e}"))
        })?,
    };
    Matrix::from_rows(&rows).map_err(|e| Failure::Validation(format!("--{flag}: {e}")))
}

fn gain(a: &GainArgs) -> Result<(), Failure> {
    let (f, g) = match (&a.f, &a.g) {
        (Some(f), Some(g)) => (json_matrix("f", f)?, json_matrix("g", g)?),
        _ => {
            let s = load(&a.scenario, &a.preset, a.strict)?;
            let plant = s.plant.as_ref().ok_or_else(|| {
                Failure::Validation("plant: gain needs a closed-loop scenario".into())
            })?;
            (s.reference()?.abar().clone(), plant.b().clone())
        }
    };
    let gamma = isiss_gain(&f, &g)?;
    let env = hurwitz_envelope(&f)?;
    println!("gamma {}", fmt_sig(gamma, 7));
    println!("c {}", fmt_sig(env.c, 7));
    println!("lambda {}", fmt_sig(env.lambda, 7));
    Ok(())
}

#[derive(Serialize)]
struct Row {
    controller: &'static str,
    spikes: usize,
    xtilde_bound: Option<f64>,
    max_xtilde: Option<f64>,
    pass: bool,
}

fn table1(o: &Overrides) -> Result<(), Failure> {
    let names = [
        ("I", "batch-reactor-I"),
        ("II", "batch-reactor-II"),
        ("III", "batch-reactor-III"),
    ];
    let scenarios = names
        .iter()
        .map(|(_, p)| load(&None, &Some(p.to_string()), true).and_then(|s| apply(s, o)))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || execute(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut rows = Vec::new();
    println!(
        "{:<10} {:>7} {:>12} {:>12} {:>5}",
        "controller", "spikes", "bound", "achieved", "pass"
    );
    for (((label, preset), s), outcome) in names.iter().zip(&scenarios).zip(outcomes) {
        let out = outcome?;
        guard(&out.sim.status)?;
        if o.out_dir.is_some() {
            let mut s = s.clone();
            s.outputs.trajectory = format!("{preset}-trajectory.csv");
            s.outputs.spikes = format!("{preset}-spikes.csv");
            s.outputs.report = format!("{preset}-report.json");
            write_outputs(&s, o, &out, true)?;
        }
        let r = &out.report;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| fmt_sig(v, 5));
        println!(
            "{:<10} {:>7} {:>12} {:>12} {:>5}",
            label,
            out.sim.spike_count(),
            show(r.xtilde_bound),
            show(r.achieved.max_xtilde),
            r.pass
        );
        rows.push(Row {
            controller: label,
            spikes: out.sim.spike_count(),
            xtilde_bound: r.xtilde_bound,
            max_xtilde: r.achieved.max_xtilde,
            pass: r.pass,
        });
    }
    if o.out_dir.is_some() {
        let json =
            serde_json::to_string_pretty(&rows).map_err(|e| Failure::Other(e.to_string()))?;
        write_atomic(&out_path(o, "table1.json"), &(json + "\n"))?;
    }
    Ok(())
}
