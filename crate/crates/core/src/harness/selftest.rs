use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::{average_precision, balanced_accuracy, roc_auc};
use crate::oracle;
use crate::qnn::{build_amp_gen, build_ang_ry, Encoding};
use crate::statevec::{Observable, StateVector};
use crate::stats::{mann_whitney_u, wilcoxon_signed_rank};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Fast oracle comparisons covering the simulator, gradients, metrics and
/// statistics.
pub fn run_selftest() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let obs = if n > 1 {
            Observable::LocalZ
        } else {
            Observable::GlobalZ
        };
        let c = oracle::random_circuit(&mut rng, n, 12, Encoding::Angle, obs);
        let x: Vec<f64> = (0..c.n_inputs())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let p: Vec<f64> = (0..c.n_params())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let fast = c.forward(&x, &p).unwrap_or_default();
        let dense = oracle::dense_forward(&c, &x, &p);
        for (a, b) in fast.iter().zip(&dense) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(check("statevector vs dense unitary", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let c = oracle::random_circuit(&mut rng, n, 12, Encoding::Angle, Observable::LocalZ);
        let x: Vec<f64> = (0..c.n_inputs())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let p: Vec<f64> = (0..c.n_params())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let up: Vec<f64> = (0..c.output_len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        match c.backward(&x, &p, &up) {
            Ok(g) => {
                let shift = oracle::parameter_shift_params(&c, &x, &p, &up);
                for (a, b) in g.params.iter().zip(&shift) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(check("adjoint vs parameter shift", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let theta = -PI + 2.0 * PI * i as f64 / 19.0;
        let c = build_ang_ry(1, 1, false).expect("single-qubit circuit");
        let p = vec![0.0; c.n_params()];
        let f = c.forward(&[theta], &p).map(|v| v[0]).unwrap_or(f64::NAN);
        let g = c
            .backward(&[theta], &p, &[1.0])
            .map(|g| g.inputs[0])
            .unwrap_or(f64::NAN);
        worst = worst
            .max((f - theta.cos()).abs())
            .max((g + theta.sin()).abs());
    }
    out.push(check(
        "RY expectation cos θ and gradient −sin θ",
        worst,
        1e-12,
    ));

    let amp = build_amp_gen(4, true).map(|c| c.n_params()).unwrap_or(0);
    let ang = build_ang_ry(4, 16, true).map(|c| c.n_params()).unwrap_or(0);
    out.push(Check {
        name: "parameter parity at 4 qubits",
        passed: amp == 48 && ang == 48,
        detail: format!("Amp-Gen {amp}, Ang-RY {ang}"),
    });

    let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap_or(f64::NAN);
    let ap = average_precision(&[0.8, 0.4, 0.35, 0.1], &[1, 0, 1, 0]).unwrap_or(f64::NAN);
    let ba = balanced_accuracy(&[1.0, 1.0, -1.0, -1.0], &[1, 0, 1, 0]).unwrap_or(f64::NAN);
    out.push(check(
        "metric worked examples",
        (auc - 0.75)
            .abs()
            .max((ap - 5.0 / 6.0).abs())
            .max((ba - 0.5).abs()),
        1e-15,
    ));

    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3..3) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3..3) as f64).collect();
        if let Ok(r) = wilcoxon_signed_rank(&x, &y) {
            worst = worst.max((r.p_value - oracle::brute_force_wilcoxon(&x, &y)).abs());
        }
        let (a, b) = x.split_at(n / 2);
        if let Ok(r) = mann_whitney_u(a, b) {
            worst = worst.max((r.p_value - oracle::brute_force_mann_whitney(a, b)).abs());
        }
    }
    out.push(check("exact rank tests vs enumeration", worst, 1e-12));

    let s = StateVector::amplitude_encode(&[3.0, 4.0], 1);
    let ok = s
        .map(|s| (s.amps()[0].re - 0.6).abs() < 1e-15 && (s.amps()[1].re - 0.8).abs() < 1e-15)
        .unwrap_or(false);
    out.push(Check {
        name: "amplitude encoding normalization",
        passed: ok,
        detail: "[3, 4] → [0.6, 0.8]".into(),
    });
    out
}
