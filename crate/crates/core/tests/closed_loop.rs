mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spikeloop::certify::{convergence_check, verify, CertInputs};
use spikeloop::network::build_siso_pair;
use spikeloop::plant::{ClosedLoopReference, LtiPlant};
use spikeloop::simulator::{emulation_metrics, simulate, Emulated, SimConfig};
use spikeloop::Matrix;

fn x_at(sim: &spikeloop::simulator::SimResult, k: usize) -> Vec<Vec<f64>> {
    sim.states[k].iter().map(|v| vec![*v]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Between samples the state follows the open-loop flow; across a spike
    /// it jumps by `amp·B[:, channel]`.
    #[test]
    fn trajectory_is_flow_plus_jumps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut case = random_siso(&mut rng, 1e-3);
        case.cfg.t_end = case.cfg.t_end.min(1.5);
        let sim = simulate(&case.plant, &case.net, &case.reference, &case.cfg).unwrap();
        prop_assume!(sim.completed());
        let a = dense(case.plant.a());
        let b = case.plant.b();
        let mut spikes = sim.spikes.iter().peekable();
        for k in 1..sim.times.len() {
            let dt = sim.times[k] - sim.times[k - 1];
            let expected: Vec<f64> = if dt == 0.0 {
                let s = spikes.next().expect("a zero-width sample pair is a spike");
                prop_assert_eq!(s.time, sim.times[k]);
                let mut x = sim.states[k - 1].clone();
                for i in 0..x.len() {
                    x[i] += s.signed_amplitude * b[(i, s.channel)];
                }
                // simultaneous spikes share the instant
                while spikes.peek().is_some_and(|n| n.time == s.time) {
                    let n = spikes.next().unwrap();
                    for i in 0..x.len() {
                        x[i] += n.signed_amplitude * b[(i, n.channel)];
                    }
                }
                x
            } else {
                mul(&expm_rk4(&a, dt, 4), &x_at(&sim, k - 1)).into_iter().map(|r| r[0]).collect()
            };
            let scale = vnorm(&sim.states[k - 1]).max(1.0);
            for (x, e) in sim.states[k].iter().zip(&expected) {
                prop_assert!((x - e).abs() <= 1e-10 * scale, "sample {}: {} vs {}", k, x, e);
            }
        }
        prop_assert!(spikes.next().is_none());
    }

    /// The reference trajectory is the flow of `Ā` from `x0`.
    #[test]
    fn reference_follows_closed_loop(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut case = random_siso(&mut rng, 1e-3);
        case.cfg.t_end = 1.0;
        let sim = simulate(&case.plant, &case.net, &case.reference, &case.cfg).unwrap();
        let abar = dense(case.reference.abar());
        let x0: Dense = case.reference.x0().iter().map(|v| vec![*v]).collect();
        for k in (0..sim.times.len()).step_by(97) {
            let e = mul(&expm_rk4(&abar, sim.times[k], 200), &x0);
            for (x, e) in sim.reference[k].iter().zip(&e) {
                prop_assert!((x - e[0]).abs() < 1e-9 * (1.0 + e[0].abs()));
            }
        }
    }

    /// `∫e = Σ sign·gain·(ξ − ξ0)` on every sample, and each neuron's
    /// integrated rate stays within one amplitude of its emitted mass.
    #[test]
    fn identity_and_neuron_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut case = random_siso(&mut rng, 1e-4);
        case.cfg.t_end = case.cfg.t_end.min(2.0);
        let sim = simulate(&case.plant, &case.net, &case.reference, &case.cfg).unwrap();
        prop_assert!(sim.completed());
        let k = Matrix::scalar(case.k);
        let trace = emulation_metrics(&sim, Emulated::Linear(&k), &case.net).unwrap();
        prop_assert!(trace.relative_identity_residual() < 1e-6, "{}", trace.relative_identity_residual());
        for n in &trace.neurons {
            prop_assert!(n.sup <= n.amplitude + n.eps_num, "{} > {} + {}", n.sup, n.amplitude, n.eps_num);
        }
    }
}

fn scalar_demo() -> (LtiPlant, ClosedLoopReference) {
    let plant = LtiPlant::new(
        Matrix::scalar(1.0),
        Matrix::scalar(-1.0),
        Matrix::scalar(1.0),
    )
    .unwrap();
    let reference =
        ClosedLoopReference::for_feedback(&plant, &Matrix::scalar(2.0), vec![1.0]).unwrap();
    (plant, reference)
}

#[test]
fn scalar_demo_certifies() {
    let (plant, reference) = scalar_demo();
    let net = build_siso_pair(2.0, 0.1, 0.1).unwrap();
    let sim = simulate(&plant, &net, &reference, &SimConfig::new(5.0)).unwrap();
    let k = Matrix::scalar(2.0);
    let trace = emulation_metrics(&sim, Emulated::Linear(&k), &net).unwrap();
    let report = verify(
        &sim,
        &trace,
        &CertInputs::for_loop(&plant, &reference, &net).unwrap(),
    );
    assert!(report.pass, "{:#?}", report.checks);
    // γ = 2 for (−1, −1); bound is γ·max(α₁, α₂) from rest
    assert!((report.xtilde_bound.unwrap() - 0.2).abs() < 1e-6);
    assert!(report.achieved.max_xtilde.unwrap() <= 0.2);
}

#[test]
fn halving_the_step_moves_little() {
    let (plant, reference) = scalar_demo();
    let net = build_siso_pair(2.0, 0.1, 0.1).unwrap();
    let k = Matrix::scalar(2.0);
    let checks = convergence_check(
        |h| {
            let sim = simulate(&plant, &net, &reference, &SimConfig::new(3.0).with_step(h))?;
            let trace = emulation_metrics(&sim, Emulated::Linear(&k), &net)?;
            Ok((sim, trace))
        },
        1e-3,
        Some(2.0),
    )
    .unwrap();
    for c in &checks {
        assert!(c.pass, "{c:?}");
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let case = random_siso(&mut rng, 1e-4);
    let a = simulate(&case.plant, &case.net, &case.reference, &case.cfg).unwrap();
    let b = simulate(&case.plant, &case.net, &case.reference, &case.cfg).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
    assert_eq!(a.spikes, b.spikes);
}

#[test]
fn rest_stays_at_rest() {
    let (plant, _) = scalar_demo();
    let reference =
        ClosedLoopReference::for_feedback(&plant, &Matrix::scalar(2.0), vec![0.0]).unwrap();
    let net = build_siso_pair(2.0, 0.1, 0.1).unwrap();
    let sim = simulate(&plant, &net, &reference, &SimConfig::new(2.0)).unwrap();
    assert!(sim.spikes.is_empty());
    assert!(sim.states.iter().flatten().all(|&v| v == 0.0));
}
