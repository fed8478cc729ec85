//! Dense statevector simulation for small registers.
//!
//! Qubit 0 is the least significant bit of the basis-state index, so the
//! amplitude of `|q_{n-1} ... q_1 q_0⟩` lives at `Σ q_k 2^k`.
//!
//! Rotation conventions:
//!
//! * `RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`
//! * `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`
//! * `ArbRot(φ, θ, ω) = RZ(ω)·RY(θ)·RZ(φ)` (φ applied first)

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 10;

/// Amplitude-encoding inputs with a smaller L2 norm are rejected.
pub const ZERO_NORM_THRESHOLD: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::Length {
                what: "amplitudes",
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Real amplitudes `features / ‖features‖`, zero-padded to `2^n_qubits`.
    pub fn amplitude_encode(features: &[f64], n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let capacity = 1 << n_qubits;
        if features.len() > capacity {
            return Err(Error::Capacity {
                len: features.len(),
                capacity,
            });
        }
        let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= ZERO_NORM_THRESHOLD {
            return Err(Error::ZeroNorm(norm));
        }
        let mut amps = vec![ZERO; capacity];
        for (a, &x) in amps.iter_mut().zip(features) {
            *a = Complex64::new(x / norm, 0.0);
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::QubitIndex {
                index: q,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        Ok(())
    }

    /// Applies a 2×2 matrix to qubit `q` by iterating amplitude pairs that
    /// differ only in bit `q`.
    pub fn apply_single(&mut self, q: usize, m: &Matrix2) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_ry(&mut self, q: usize, angle: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = a0 * c - a1 * s;
                self.amps[j] = a0 * s + a1 * c;
            }
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, q: usize, angle: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let lo = Complex64::new(c, -s);
        let hi = Complex64::new(c, s);
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & mask == 0 { lo } else { hi };
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        let both = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & both == both {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Pauli-Y on qubit `q` (the RY generator).
    pub fn apply_pauli_y(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = -i_unit * a1;
                self.amps[j] = i_unit * a0;
            }
        }
        Ok(())
    }

    /// Pauli-Z on qubit `q` (the RZ generator).
    pub fn apply_pauli_z(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Multiplies each amplitude by a real diagonal entry.
    pub fn apply_diagonal(&mut self, diag: &[f64]) -> Result<()> {
        if diag.len() != self.amps.len() {
            return Err(Error::Length {
                what: "diagonal",
                expected: self.amps.len(),
                got: diag.len(),
            });
        }
        for (a, d) in self.amps.iter_mut().zip(diag) {
            *a *= d;
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Ry { qubit, angle } => self.apply_ry(qubit, angle),
            Gate::Rz { qubit, angle } => self.apply_rz(qubit, angle),
            Gate::ArbRot {
                qubit,
                phi,
                theta,
                omega,
            } => {
                self.apply_rz(qubit, phi)?;
                self.apply_ry(qubit, theta)?;
                self.apply_rz(qubit, omega)
            }
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::Cz { a, b } => self.apply_cz(a, b),
            Gate::TwoQubitBlock { q1, q2, params } => {
                self.check_pair(q1, q2)?;
                for g in two_qubit_block(q1, q2, params) {
                    self.apply(&g)?;
                }
                Ok(())
            }
        }
    }

    pub fn expval(&self, obs: &Observable) -> Result<Vec<f64>> {
        match *obs {
            Observable::LocalZ => (0..self.n_qubits).map(|q| self.expval_z(q)).collect(),
            Observable::GlobalZ => Ok(vec![self
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| parity_sign(i) * a.norm_sqr())
                .sum()]),
            Observable::SingleZ(q) => Ok(vec![self.expval_z(q)?]),
        }
    }

    fn expval_z(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::QubitCount(n))
    }
}

fn parity_sign(i: usize) -> f64 {
    if i.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Ry {
        qubit: usize,
        angle: f64,
    },
    Rz {
        qubit: usize,
        angle: f64,
    },
    ArbRot {
        qubit: usize,
        phi: f64,
        theta: f64,
        omega: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    /// Three-parameter two-qubit convolution/pooling unit, see [`two_qubit_block`].
    TwoQubitBlock {
        q1: usize,
        q2: usize,
        params: [f64; 3],
    },
}

/// Primitive decomposition of the two-qubit QCNN block.
pub fn two_qubit_block(q1: usize, q2: usize, p: [f64; 3]) -> [Gate; 8] {
    use std::f64::consts::FRAC_PI_2;
    [
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
            angle: p[0],
        },
        Gate::Ry {
            qubit: q2,
            angle: p[1],
        },
        Gate::Cnot {
            control: q1,
            target: q2,
        },
        Gate::Ry {
            qubit: q2,
            angle: p[2],
        },
        Gate::Cnot {
            control: q2,
            target: q1,
        },
        Gate::Rz {
            qubit: q1,
            angle: FRAC_PI_2,
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// One ⟨Z_q⟩ per qubit.
    LocalZ,
    /// ⟨Z ⊗ Z ⊗ … ⊗ Z⟩ over the whole register.
    GlobalZ,
    SingleZ(usize),
}

impl Observable {
    pub fn output_len(&self, n_qubits: usize) -> usize {
        match self {
            Observable::LocalZ => n_qubits,
            _ => 1,
        }
    }

    /// Diagonal of `Σ_k w_k M_k` in the computational basis, where `M_k` are
    /// the observable's output components.
    pub fn weighted_diagonal(&self, n_qubits: usize, weights: &[f64]) -> Result<Vec<f64>> {
        let expected = self.output_len(n_qubits);
        if weights.len() != expected {
            return Err(Error::Length {
                what: "observable weights",
                expected,
                got: weights.len(),
            });
        }
        let dim = 1usize << n_qubits;
        let z = |i: usize, q: usize| if i >> q & 1 == 0 { 1.0 } else { -1.0 };
        Ok(match *self {
            Observable::LocalZ => (0..dim)
                .map(|i| (0..n_qubits).map(|q| weights[q] * z(i, q)).sum())
                .collect(),
            Observable::GlobalZ => (0..dim).map(|i| weights[0] * parity_sign(i)).collect(),
            Observable::SingleZ(q) => {
                if q >= n_qubits {
                    return Err(Error::QubitIndex { index: q, n_qubits });
                }
                (0..dim).map(|i| weights[0] * z(i, q)).collect()
            }
        })
    }
}
