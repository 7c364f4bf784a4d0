//! Independent reference computations shared by the integration tests.
//! None of these call into the library's numeric kernels.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spikeloop::network::PwaFunction;
use spikeloop::Matrix;

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix) -> Dense {
    m.to_rows()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            for j in 0..m {
                out[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

fn axpy(a: &Dense, s: f64, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + s * v).collect())
        .collect()
}

pub fn eye(n: usize) -> Dense {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
pub fn jacobi_eigenvalues(s: &Dense) -> Vec<f64> {
    let n = s.len();
    let mut a = s.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Spectral norm from the eigenvalues of `AᵀA`.
pub fn two_norm(a: &Dense) -> f64 {
    let ata = mul(&transpose(a), a);
    jacobi_eigenvalues(&ata)
        .into_iter()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

/// `e^{At}` by classical RK4 on `Φ' = AΦ`.
pub fn expm_rk4(a: &Dense, t: f64, steps: usize) -> Dense {
    let n = a.len();
    let h = t / steps as f64;
    let mut phi = eye(n);
    for _ in 0..steps {
        let k1 = mul(a, &phi);
        let k2 = mul(a, &axpy(&phi, 0.5 * h, &k1));
        let k3 = mul(a, &axpy(&phi, 0.5 * h, &k2));
        let k4 = mul(a, &axpy(&phi, h, &k3));
        for i in 0..n {
            for j in 0..n {
                phi[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
    }
    phi
}

/// `‖G‖ + ∫₀^∞ ‖F e^{Fs} G‖ ds` by the trapezoid rule on an RK4-propagated
/// transition matrix, truncated once the integrand is negligible.
pub fn gain_trapezoid(f: &Dense, g: &Dense, ds: f64) -> f64 {
    let step = expm_rk4(f, ds, 8);
    let mut phi = eye(f.len());
    let fg = |phi: &Dense| two_norm(&mul(&mul(f, phi), g));
    let mut prev = fg(&phi);
    let peak = prev.max(1e-300);
    let mut total = 0.0;
    let mut s = 0.0;
    loop {
        phi = mul(&step, &phi);
        s += ds;
        let cur = fg(&phi);
        total += 0.5 * ds * (prev + cur);
        prev = cur;
        if cur < 1e-11 * peak && s > 1.0 || s > 1e4 {
            break;
        }
    }
    two_norm(g) + total
}

/// PWA value by walking segments from the first breakpoint, where the
/// function takes the value `c`.
pub fn pwa_segments(g: &PwaFunction, y: f64) -> f64 {
    let b = &g.breakpoints;
    let s = &g.slopes;
    if y <= b[0] {
        return g.c + s[0] * (y - b[0]);
    }
    let mut v = g.c;
    for i in 0..b.len() {
        let right = b.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let end = y.min(right);
        v += s[i + 1] * (end - b[i]);
        if y <= right {
            break;
        }
    }
    v
}

pub fn vnorm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Random matrix with entries uniform in `[-scale, scale]`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
}

/// A Hurwitz matrix `−(SSᵀ + δI) + (W − Wᵀ)`: its symmetric part is
/// negative definite.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let s = random_matrix(rng, n, n, scale);
    let w = random_matrix(rng, n, n, scale);
    let delta = rng.random_range(0.2..1.0);
    Matrix::from_fn(n, n, |i, j| {
        let sst: f64 = (0..n).map(|k| s[(i, k)] * s[(j, k)]).sum();
        -sst - if i == j { delta } else { 0.0 } + w[(i, j)] - w[(j, i)]
    })
}

/// Continuous PWA function with `n` sorted breakpoints in `[-2, 2]`.
pub fn random_pwa(rng: &mut ChaCha8Rng, n: usize) -> PwaFunction {
    let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    b.sort_by(f64::total_cmp);
    for i in 1..n {
        if b[i] - b[i - 1] < 0.05 {
            b[i] = b[i - 1] + 0.05;
        }
    }
    let slopes = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
    PwaFunction::new(rng.random_range(-1.0..1.0), b, slopes).expect("valid random PWA")
}

/// Sum of a few random sinusoids with frequencies up to `f_max`.
pub fn band_limited(
    rng: &mut ChaCha8Rng,
    terms: usize,
    amplitude: f64,
    f_max: f64,
) -> impl Fn(f64) -> f64 + Clone {
    let comps: Vec<(f64, f64, f64)> = (0..terms)
        .map(|_| {
            (
                rng.random_range(0.2..1.0) * amplitude / terms as f64,
                rng.random_range(0.05..f_max),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let offset = rng.random_range(-0.5..0.5);
    move |t| {
        offset
            + comps
                .iter()
                .map(|(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                .sum::<f64>()
    }
}

/// A random SISO closed loop: `Ā` is drawn Hurwitz, then `A = Ā − BKC`,
/// so the open loop may or may not be stable.
pub struct SisoCase {
    pub plant: spikeloop::plant::LtiPlant,
    pub net: spikeloop::network::ControllerNetwork,
    pub reference: spikeloop::plant::ClosedLoopReference,
    pub cfg: spikeloop::simulator::SimConfig,
    pub k: f64,
    pub alpha: (f64, f64),
    pub from_rest: bool,
}

pub fn random_siso(rng: &mut ChaCha8Rng, h: f64) -> SisoCase {
    use spikeloop::network::build_siso_pair;
    use spikeloop::plant::{ClosedLoopReference, LtiPlant};
    use spikeloop::simulator::SimConfig;

    let n = rng.random_range(1..=4);
    let abar = random_hurwitz(rng, n, 1.2);
    let b = random_matrix(rng, n, 1, 1.0);
    let c = random_matrix(rng, 1, n, 1.0);
    let k = rng.random_range(0.05..=5.0);
    let a = Matrix::from_fn(n, n, |i, j| abar[(i, j)] - b[(i, 0)] * k * c[(0, j)]);
    let plant = LtiPlant::new(a, b, c).unwrap();
    let alpha = (rng.random_range(0.01..=0.5), rng.random_range(0.01..=0.5));
    let mut net = build_siso_pair(k, alpha.0, alpha.1).unwrap();
    let from_rest = rng.random_bool(0.5);
    if !from_rest {
        let xi0 = [
            rng.random_range(0.0..0.99) * alpha.0 / k,
            rng.random_range(0.0..0.99) * alpha.1 / k,
        ];
        net = net.with_initial_states(&xi0).unwrap();
    }
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let reference = ClosedLoopReference::new(abar, x0).unwrap();
    let t_end = rng.random_range(0.5..=5.0);
    SisoCase {
        plant,
        net,
        reference,
        cfg: SimConfig::new(t_end).with_step(h),
        k,
        alpha,
        from_rest,
    }
}
