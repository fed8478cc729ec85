//! Slow reference implementations used to check the fast paths.
//!
//! Nothing here is used by training or evaluation. Each routine computes
//! the same quantity as a production function along an independent route:
//! dense Kronecker-product unitaries instead of in-place stride updates,
//! parameter shifts and finite differences instead of the adjoint sweep,
//! explicit enumeration instead of dynamic programming.

use num_complex::Complex64;

use crate::qnn::Circuit;
use crate::statevec::{Gate, Observable};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let dim = self.dim * other.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.get(r1, c1);
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        data[(r1 * other.dim + r2) * dim + c1 * other.dim + c2] =
                            a * other.get(r2, c2);
                    }
                }
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        DenseMatrix { dim: n, data }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        DenseMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ry(theta: f64) -> DenseMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    DenseMatrix::from_rows(&[&[c(co, 0.0), c(-s, 0.0)], &[c(s, 0.0), c(co, 0.0)]])
}

pub fn rz(theta: f64) -> DenseMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    DenseMatrix::from_rows(&[&[c(co, -s), c(0.0, 0.0)], &[c(0.0, 0.0), c(co, s)]])
}

pub fn pauli_x() -> DenseMatrix {
    DenseMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn pauli_z() -> DenseMatrix {
    DenseMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(-1.0, 0.0)]])
}

fn proj(bit: usize) -> DenseMatrix {
    let mut m = DenseMatrix {
        dim: 2,
        data: vec![c(0.0, 0.0); 4],
    };
    m.data[bit * 2 + bit] = c(1.0, 0.0);
    m
}

/// `⊗_{k=n-1..0} factor(k)`: qubit 0 is the rightmost (least significant)
/// tensor factor.
pub fn embed(n_qubits: usize, factor: impl Fn(usize) -> DenseMatrix) -> DenseMatrix {
    let mut m = factor(n_qubits - 1);
    for k in (0..n_qubits - 1).rev() {
        m = m.kron(&factor(k));
    }
    m
}

fn single(n: usize, q: usize, g: DenseMatrix) -> DenseMatrix {
    embed(n, |k| {
        if k == q {
            g.clone()
        } else {
            DenseMatrix::identity(2)
        }
    })
}

/// Dense `2^n × 2^n` unitary of one gate.
pub fn gate_matrix(n: usize, gate: &Gate) -> DenseMatrix {
    match *gate {
        Gate::Ry { qubit, angle } => single(n, qubit, ry(angle)),
        Gate::Rz { qubit, angle } => single(n, qubit, rz(angle)),
        Gate::ArbRot {
            qubit,
            phi,
            theta,
            omega,
        } => single(n, qubit, rz(omega).matmul(&ry(theta)).matmul(&rz(phi))),
        Gate::Cnot { control, target } => {
            // |0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t
            let off = embed(n, |k| {
                if k == control {
                    proj(0)
                } else {
                    DenseMatrix::identity(2)
                }
            });
            let on = embed(n, |k| {
                if k == control {
                    proj(1)
                } else if k == target {
                    pauli_x()
                } else {
                    DenseMatrix::identity(2)
                }
            });
            off.add(&on)
        }
        Gate::Cz { a, b } => {
            let off = embed(n, |k| {
                if k == a {
                    proj(0)
                } else {
                    DenseMatrix::identity(2)
                }
            });
            let on = embed(n, |k| {
                if k == a {
                    proj(1)
                } else if k == b {
                    pauli_z()
                } else {
                    DenseMatrix::identity(2)
                }
            });
            off.add(&on)
        }
        Gate::TwoQubitBlock { q1, q2, params } => {
            use std::f64::consts::FRAC_PI_2;
            let seq = [
                Gate::Rz {
                    qubit: q2,
                    angle: -FRAC_PI_2,
                },
                Gate::Cnot {
                    control: q2,
                    target: q1,
                },
                Gate::Rz {
                    qubit: q1,
                    angle: params[0],
                },
                Gate::Ry {
                    qubit: q2,
                    angle: params[1],
                },
                Gate::Cnot {
                    control: q1,
                    target: q2,
                },
                Gate::Ry {
                    qubit: q2,
                    angle: params[2],
                },
                Gate::Cnot {
                    control: q2,
                    target: q1,
                },
                Gate::Rz {
                    qubit: q1,
                    angle: FRAC_PI_2,
                },
            ];
            seq.iter().fold(DenseMatrix::identity(1 << n), |acc, g| {
                gate_matrix(n, g).matmul(&acc)
            })
        }
    }
}

/// Product of dense gate unitaries (first gate applied first).
pub fn circuit_unitary(n: usize, gates: &[Gate]) -> DenseMatrix {
    gates.iter().fold(DenseMatrix::identity(1 << n), |acc, g| {
        gate_matrix(n, g).matmul(&acc)
    })
}

/// Dense observable components as matrices.
pub fn observable_matrices(n: usize, obs: &Observable) -> Vec<DenseMatrix> {
    match *obs {
        Observable::LocalZ => (0..n).map(|q| single(n, q, pauli_z())).collect(),
        Observable::GlobalZ => vec![embed(n, |_| pauli_z())],
        Observable::SingleZ(q) => vec![single(n, q, pauli_z())],
    }
}

/// `⟨ψ|M|ψ⟩` by dense matrix-vector products.
pub fn dense_expval(psi: &[Complex64], m: &DenseMatrix) -> f64 {
    let mpsi = m.matvec(psi);
    psi.iter()
        .zip(&mpsi)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .re
}

/// Circuit outputs through dense unitaries, including amplitude encoding
/// done by hand.
pub fn dense_forward(circuit: &Circuit, inputs: &[f64], params: &[f64]) -> Vec<f64> {
    let n = circuit.n_qubits();
    let dim = 1usize << n;
    let mut psi = vec![c(0.0, 0.0); dim];
    match circuit.encoding() {
        crate::qnn::Encoding::Angle => psi[0] = c(1.0, 0.0),
        crate::qnn::Encoding::Amplitude => {
            let norm = inputs.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (p, x) in psi.iter_mut().zip(inputs) {
                *p = c(x / norm, 0.0);
            }
        }
    }
    let gates = circuit.bound_gates(inputs, params).expect("valid lengths");
    let out = circuit_unitary(n, &gates).matvec(&psi);
    observable_matrices(n, &circuit.observable())
        .iter()
        .map(|m| dense_expval(&out, m))
        .collect()
}

fn weighted(out: &[f64], upstream: &[f64]) -> f64 {
    out.iter().zip(upstream).map(|(o, u)| o * u).sum()
}

/// Parameter-shift gradient `(f(θ+π/2) − f(θ−π/2))/2` for every parameter.
/// Valid because every parameter drives exactly one RY/RZ.
pub fn parameter_shift_params(
    circuit: &Circuit,
    inputs: &[f64],
    params: &[f64],
    upstream: &[f64],
) -> Vec<f64> {
    let shift = std::f64::consts::FRAC_PI_2;
    (0..params.len())
        .map(|i| {
            let mut p = params.to_vec();
            p[i] += shift;
            let plus = weighted(&circuit.forward(inputs, &p).unwrap(), upstream);
            p[i] -= 2.0 * shift;
            let minus = weighted(&circuit.forward(inputs, &p).unwrap(), upstream);
            (plus - minus) / 2.0
        })
        .collect()
}

/// Parameter-shift gradient with respect to angle-encoded inputs.
pub fn parameter_shift_inputs(
    circuit: &Circuit,
    inputs: &[f64],
    params: &[f64],
    upstream: &[f64],
) -> Vec<f64> {
    let shift = std::f64::consts::FRAC_PI_2;
    (0..inputs.len())
        .map(|i| {
            let mut x = inputs.to_vec();
            x[i] += shift;
            let plus = weighted(&circuit.forward(&x, params).unwrap(), upstream);
            x[i] -= 2.0 * shift;
            let minus = weighted(&circuit.forward(&x, params).unwrap(), upstream);
            (plus - minus) / 2.0
        })
        .collect()
}

/// Central finite differences of a scalar function.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xs[i];
            xs[i] = orig + h;
            let plus = f(&xs);
            xs[i] = orig - h;
            let minus = f(&xs);
            xs[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor for near-zero gradients.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// ROC-AUC by counting concordant positive/negative pairs (ties ½).
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

fn midranks(values: &[f64]) -> Vec<f64> {
    // O(n²) rank assignment: rank = 1 + #smaller + (#equal − 1)/2.
    values
        .iter()
        .map(|&v| {
            let smaller = values.iter().filter(|&&w| w < v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact Wilcoxon signed-rank p-value by enumerating all `2^n`
/// sign patterns. Zero differences are dropped.
pub fn brute_force_wilcoxon(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = d.len();
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * (le.min(ge) as f64) / total).min(1.0)
}

/// Two-sided exact Mann-Whitney p-value by enumerating every assignment of
/// `|a|` pooled observations to group a.
pub fn brute_force_mann_whitney(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (na, n) = (a.len(), pooled.len());
    let min_sum = (na * (na + 1)) as f64 / 2.0;
    let observed: f64 = ranks[..na].iter().sum::<f64>() - min_sum;
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        let u: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum::<f64>()
            - min_sum;
        if u <= observed + 1e-9 {
            le += 1;
        }
        if u >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * (le.min(ge) as f64) / total as f64).min(1.0)
}

/// Random circuit over every op kind. Angle-encoded circuits bind some
/// angles to inputs; amplitude-encoded ones take `2^n` inputs.
pub fn random_circuit<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
    n_ops: usize,
    encoding: crate::qnn::Encoding,
    observable: Observable,
) -> Circuit {
    use crate::qnn::{Angle, CircuitBuilder, Encoding, Op};
    let n_inputs = match encoding {
        Encoding::Angle => n_ops * 3,
        Encoding::Amplitude => 1 << n_qubits,
    };
    let mut b = CircuitBuilder::new(n_qubits, encoding, n_inputs);
    let (mut next_param, mut next_input) = (0, 0);
    let mut angle = |rng: &mut R| -> Angle {
        let roll = rng.random_range(0..10);
        if roll < 6 {
            next_param += 1;
            Angle::Param(next_param - 1)
        } else if roll < 9 && encoding == Encoding::Angle {
            next_input += 1;
            Angle::Input(next_input - 1)
        } else {
            Angle::Fixed(rng.random_range(-3.0..3.0))
        }
    };
    let pair = |rng: &mut R| -> (usize, usize) {
        let a = rng.random_range(0..n_qubits);
        let mut b = rng.random_range(0..n_qubits - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    };
    for _ in 0..n_ops {
        let kinds = if n_qubits > 1 { 6 } else { 3 };
        let op = match rng.random_range(0..kinds) {
            0 => Op::Ry {
                qubit: rng.random_range(0..n_qubits),
                angle: angle(rng),
            },
            1 => Op::Rz {
                qubit: rng.random_range(0..n_qubits),
                angle: angle(rng),
            },
            2 => Op::ArbRot {
                qubit: rng.random_range(0..n_qubits),
                angles: [angle(rng), angle(rng), angle(rng)],
            },
            3 => {
                let (control, target) = pair(rng);
                Op::Cnot { control, target }
            }
            4 => {
                let (a, b) = pair(rng);
                Op::Cz { a, b }
            }
            _ => {
                let (q1, q2) = pair(rng);
                Op::TwoQubitBlock {
                    q1,
                    q2,
                    angles: [angle(rng), angle(rng), angle(rng)],
                }
            }
        };
        b.op(op);
    }
    b.build(observable).expect("generated circuit is valid")
}
