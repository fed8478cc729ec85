//! Parameterized circuits for the four QNN families and their adjoint-mode
//! gradients.
//!
//! A [`Circuit`] is an immutable gate program whose rotation angles are bound
//! to slots: trainable parameters, encoded inputs, or fixed constants. The
//! high-level program (with `ArbRot` and two-qubit blocks) is lowered once at
//! build time into RY/RZ/CNOT/CZ primitives, which is what both the forward
//! pass and the reverse sweep execute.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{self, Gate, Observable, StateVector};

/// Standard deviation of the variational parameter initialization.
pub const PARAM_INIT_STD: f64 = 0.01 * PI;

/// Where a rotation angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Param(usize),
    Input(usize),
    Fixed(f64),
}

impl Angle {
    #[inline]
    fn resolve(self, inputs: &[f64], params: &[f64]) -> f64 {
        match self {
            Angle::Param(i) => params[i],
            Angle::Input(i) => inputs[i],
            Angle::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Ry {
        qubit: usize,
        angle: Angle,
    },
    Rz {
        qubit: usize,
        angle: Angle,
    },
    /// `RZ(ω)·RY(θ)·RZ(φ)` with angles `[φ, θ, ω]`.
    ArbRot {
        qubit: usize,
        angles: [Angle; 3],
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    TwoQubitBlock {
        q1: usize,
        q2: usize,
        angles: [Angle; 3],
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Prim {
    Ry(usize, Angle),
    Rz(usize, Angle),
    Cnot(usize, usize),
    Cz(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Inputs enter as rotation angles.
    Angle,
    /// Inputs (length `2^n`) are normalized into the initial amplitudes.
    Amplitude,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    encoding: Encoding,
    ops: Vec<Op>,
    prims: Vec<Prim>,
    n_params: usize,
    n_inputs: usize,
    observable: Observable,
    embedding_layers: usize,
    variational_layers: usize,
}

/// Incremental construction of arbitrary circuits; the family builders below
/// are thin wrappers around it.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    n_qubits: usize,
    encoding: Encoding,
    n_inputs: usize,
    ops: Vec<Op>,
    embedding_layers: usize,
    variational_layers: usize,
}

impl CircuitBuilder {
    pub fn new(n_qubits: usize, encoding: Encoding, n_inputs: usize) -> Self {
        Self {
            n_qubits,
            encoding,
            n_inputs,
            ops: Vec::new(),
            embedding_layers: 0,
            variational_layers: 0,
        }
    }

    pub fn op(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn build(self, observable: Observable) -> Result<Circuit> {
        if !(1..=statevec::MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::QubitCount(self.n_qubits));
        }
        let n = self.n_qubits;
        if self.encoding == Encoding::Amplitude && self.n_inputs != 1 << n {
            return Err(Error::Invalid(format!(
                "amplitude-encoded circuit on {n} qubits takes {} inputs, not {}",
                1 << n,
                self.n_inputs
            )));
        }
        let check_q = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(Error::QubitIndex {
                    index: q,
                    n_qubits: n,
                })
            }
        };
        let check_pair = |a: usize, b: usize| {
            check_q(a)?;
            check_q(b)?;
            if a == b {
                Err(Error::DuplicateQubit(a))
            } else {
                Ok(())
            }
        };
        if let Observable::SingleZ(q) = observable {
            check_q(q)?;
        }

        let mut prims = Vec::new();
        for op in &self.ops {
            match *op {
                Op::Ry { qubit, angle } => {
                    check_q(qubit)?;
                    prims.push(Prim::Ry(qubit, angle));
                }
                Op::Rz { qubit, angle } => {
                    check_q(qubit)?;
                    prims.push(Prim::Rz(qubit, angle));
                }
                Op::ArbRot { qubit, angles } => {
                    check_q(qubit)?;
                    prims.push(Prim::Rz(qubit, angles[0]));
                    prims.push(Prim::Ry(qubit, angles[1]));
                    prims.push(Prim::Rz(qubit, angles[2]));
                }
                Op::Cnot { control, target } => {
                    check_pair(control, target)?;
                    prims.push(Prim::Cnot(control, target));
                }
                Op::Cz { a, b } => {
                    check_pair(a, b)?;
                    prims.push(Prim::Cz(a, b));
                }
                Op::TwoQubitBlock { q1, q2, angles } => {
                    check_pair(q1, q2)?;
                    // Same sequence as statevec::two_qubit_block, with slots.
                    prims.extend([
                        Prim::Rz(q2, Angle::Fixed(-PI / 2.0)),
                        Prim::Cnot(q2, q1),
                        Prim::Rz(q1, angles[0]),
                        Prim::Ry(q2, angles[1]),
                        Prim::Cnot(q1, q2),
                        Prim::Ry(q2, angles[2]),
                        Prim::Cnot(q2, q1),
                        Prim::Rz(q1, Angle::Fixed(PI / 2.0)),
                    ]);
                }
            }
        }

        // Slot validation: inputs in range, parameters used exactly once and
        // densely numbered.
        let mut param_uses: Vec<usize> = Vec::new();
        let mut input_uses = vec![0usize; self.n_inputs];
        for p in &prims {
            let angle = match p {
                Prim::Ry(_, a) | Prim::Rz(_, a) => a,
                _ => continue,
            };
            match *angle {
                Angle::Param(i) => {
                    if i >= param_uses.len() {
                        param_uses.resize(i + 1, 0);
                    }
                    param_uses[i] += 1;
                }
                Angle::Input(i) => {
                    if self.encoding == Encoding::Amplitude {
                        return Err(Error::Invalid(
                            "amplitude-encoded circuits cannot bind input slots to angles".into(),
                        ));
                    }
                    if i >= self.n_inputs {
                        return Err(Error::Invalid(format!(
                            "input slot {i} out of range ({} inputs)",
                            self.n_inputs
                        )));
                    }
                    input_uses[i] += 1;
                }
                Angle::Fixed(_) => {}
            }
        }
        if let Some(i) = param_uses.iter().position(|&c| c != 1) {
            return Err(Error::Invalid(format!(
                "parameter slot {i} bound {} times",
                param_uses[i]
            )));
        }
        if self.encoding == Encoding::Angle {
            if let Some(i) = input_uses.iter().position(|&c| c > 1) {
                return Err(Error::Invalid(format!(
                    "input slot {i} bound more than once"
                )));
            }
        }

        Ok(Circuit {
            n_qubits: n,
            encoding: self.encoding,
            ops: self.ops,
            prims,
            n_params: param_uses.len(),
            n_inputs: self.n_inputs,
            observable,
            embedding_layers: self.embedding_layers,
            variational_layers: self.variational_layers,
        })
    }
}

/// Rotation layer with three fresh parameters per qubit.
fn variational_rotations(b: &mut CircuitBuilder, next_param: &mut usize) {
    for q in 0..b.n_qubits {
        let p = *next_param;
        b.op(Op::ArbRot {
            qubit: q,
            angles: [Angle::Param(p), Angle::Param(p + 1), Angle::Param(p + 2)],
        });
        *next_param += 3;
    }
    b.variational_layers += 1;
}

/// CNOTs `i → (i+1) mod n`.
fn cnot_ring(b: &mut CircuitBuilder) {
    let n = b.n_qubits;
    if n < 2 {
        return;
    }
    for i in 0..n {
        b.op(Op::Cnot {
            control: i,
            target: (i + 1) % n,
        });
    }
}

fn input_or_pad(index: usize, len: usize) -> Angle {
    if index < len {
        Angle::Input(index)
    } else {
        Angle::Fixed(0.0)
    }
}

/// Angle encoding with one RY per qubit per segment, alternating with
/// ArbRot variational layers and an optional CNOT ring.
pub fn build_ang_ry(n_qubits: usize, latent_dim: usize, entangle: bool) -> Result<Circuit> {
    if latent_dim == 0 {
        return Err(Error::Invalid("latent_dim must be positive".into()));
    }
    let layers = latent_dim.div_ceil(n_qubits.max(1));
    let mut b = CircuitBuilder::new(n_qubits, Encoding::Angle, latent_dim);
    let mut next_param = 0;
    for layer in 0..layers {
        for q in 0..n_qubits {
            b.op(Op::Ry {
                qubit: q,
                angle: input_or_pad(layer * n_qubits + q, latent_dim),
            });
        }
        b.embedding_layers += 1;
        variational_rotations(&mut b, &mut next_param);
        if entangle {
            cnot_ring(&mut b);
        }
    }
    b.build(Observable::LocalZ)
}

/// Angle encoding of three features per qubit through `ArbRot`, with CZ
/// entanglers alternating between even and odd nearest-neighbour pairs.
/// The last variational layer carries rotations only.
pub fn build_ang_arb(n_qubits: usize, latent_dim: usize, entangle: bool) -> Result<Circuit> {
    if latent_dim == 0 {
        return Err(Error::Invalid("latent_dim must be positive".into()));
    }
    let per_layer = 3 * n_qubits.max(1);
    let layers = latent_dim.div_ceil(per_layer);
    let mut b = CircuitBuilder::new(n_qubits, Encoding::Angle, latent_dim);
    let mut next_param = 0;
    for layer in 0..layers {
        for q in 0..n_qubits {
            let base = layer * per_layer + 3 * q;
            b.op(Op::ArbRot {
                qubit: q,
                angles: [
                    input_or_pad(base, latent_dim),
                    input_or_pad(base + 1, latent_dim),
                    input_or_pad(base + 2, latent_dim),
                ],
            });
        }
        b.embedding_layers += 1;
        variational_rotations(&mut b, &mut next_param);
        if entangle && layer + 1 < layers {
            // 1-based odd layers couple (0,1),(2,3),…; even layers (1,2),(3,4),…
            let start = layer % 2;
            let mut i = start;
            while i + 1 < n_qubits {
                b.op(Op::Cz { a: i, b: i + 1 });
                i += 2;
            }
        }
    }
    b.build(Observable::LocalZ)
}

fn check_amp_qubits(n_qubits: usize) -> Result<()> {
    if matches!(n_qubits, 4 | 8) {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "amplitude-encoded QNNs support 4 or 8 qubits, got {n_qubits}"
        )))
    }
}

/// Amplitude encoding followed by the Ang-RY variational stack, with as many
/// variational layers as Ang-RY would use for `2^n` features.
pub fn build_amp_gen(n_qubits: usize, entangle: bool) -> Result<Circuit> {
    check_amp_qubits(n_qubits)?;
    let dim = 1usize << n_qubits;
    let layers = dim / n_qubits;
    let mut b = CircuitBuilder::new(n_qubits, Encoding::Amplitude, dim);
    b.embedding_layers = 1;
    let mut next_param = 0;
    for _ in 0..layers {
        variational_rotations(&mut b, &mut next_param);
        if entangle {
            cnot_ring(&mut b);
        }
    }
    b.build(Observable::GlobalZ)
}

/// Amplitude-encoded QCNN: convolution and pooling stages halve the active
/// register until one qubit remains, which is measured in Z.
pub fn build_qcnn(n_qubits: usize) -> Result<Circuit> {
    check_amp_qubits(n_qubits)?;
    let dim = 1usize << n_qubits;
    let mut b = CircuitBuilder::new(n_qubits, Encoding::Amplitude, dim);
    b.embedding_layers = 1;
    let mut next_param = 0;
    let mut block = |b: &mut CircuitBuilder, q1: usize, q2: usize| {
        let p = next_param;
        next_param += 3;
        b.op(Op::TwoQubitBlock {
            q1,
            q2,
            angles: [Angle::Param(p), Angle::Param(p + 1), Angle::Param(p + 2)],
        });
    };
    let mut active: Vec<usize> = (0..n_qubits).collect();
    while active.len() > 1 {
        let m = active.len();
        for i in (0..m).step_by(2) {
            block(&mut b, active[i], active[i + 1]);
        }
        if m > 2 {
            for i in (1..m).step_by(2) {
                block(&mut b, active[i], active[(i + 1) % m]);
            }
        }
        b.variational_layers += 1;
        let mut kept = Vec::with_capacity(m / 2);
        for i in (0..m).step_by(2) {
            block(&mut b, active[i], active[i + 1]);
            kept.push(active[i + 1]);
        }
        b.variational_layers += 1;
        active = kept;
    }
    let out = active[0];
    b.build(Observable::SingleZ(out))
}

/// Input and parameter gradients of `upstream · outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGrads {
    pub inputs: Vec<f64>,
    pub params: Vec<f64>,
}

impl Circuit {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn n_params(&self) -> usize {
        self.n_params
    }
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }
    pub fn encoding(&self) -> Encoding {
        self.encoding
    }
    pub fn observable(&self) -> Observable {
        self.observable
    }
    pub fn ops(&self) -> &[Op] {
        &self.ops
    }
    pub fn output_len(&self) -> usize {
        self.observable.output_len(self.n_qubits)
    }
    pub fn embedding_layers(&self) -> usize {
        self.embedding_layers
    }
    pub fn variational_layers(&self) -> usize {
        self.variational_layers
    }

    /// Replaces the measured observable. Circuits whose readout is fixed by
    /// construction (QCNN) should not be rebound.
    pub fn with_observable(mut self, observable: Observable) -> Result<Self> {
        if let Observable::SingleZ(q) = observable {
            if q >= self.n_qubits {
                return Err(Error::QubitIndex {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        self.observable = observable;
        Ok(self)
    }

    pub fn count_ops(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(op)).count()
    }

    /// The circuit with all slots resolved, as plain gates.
    pub fn bound_gates(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<Gate>> {
        self.check_lengths(inputs, params)?;
        Ok(self
            .ops
            .iter()
            .map(|op| match *op {
                Op::Ry { qubit, angle } => Gate::Ry {
                    qubit,
                    angle: angle.resolve(inputs, params),
                },
                Op::Rz { qubit, angle } => Gate::Rz {
                    qubit,
                    angle: angle.resolve(inputs, params),
                },
                Op::ArbRot { qubit, angles } => Gate::ArbRot {
                    qubit,
                    phi: angles[0].resolve(inputs, params),
                    theta: angles[1].resolve(inputs, params),
                    omega: angles[2].resolve(inputs, params),
                },
                Op::Cnot { control, target } => Gate::Cnot { control, target },
                Op::Cz { a, b } => Gate::Cz { a, b },
                Op::TwoQubitBlock { q1, q2, angles } => Gate::TwoQubitBlock {
                    q1,
                    q2,
                    params: angles.map(|a| a.resolve(inputs, params)),
                },
            })
            .collect())
    }

    fn check_lengths(&self, inputs: &[f64], params: &[f64]) -> Result<()> {
        if inputs.len() != self.n_inputs {
            return Err(Error::Length {
                what: "circuit inputs",
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        if params.len() != self.n_params {
            return Err(Error::Length {
                what: "circuit parameters",
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    fn initial_state(&self, inputs: &[f64]) -> Result<StateVector> {
        match self.encoding {
            Encoding::Angle => StateVector::zero(self.n_qubits),
            Encoding::Amplitude => StateVector::amplitude_encode(inputs, self.n_qubits),
        }
    }

    /// Final state `U(x, θ)|ψ₀(x)⟩`.
    pub fn run(&self, inputs: &[f64], params: &[f64]) -> Result<StateVector> {
        self.check_lengths(inputs, params)?;
        let mut state = self.initial_state(inputs)?;
        for p in &self.prims {
            apply_prim(&mut state, p, inputs, params, false)?;
        }
        Ok(state)
    }

    pub fn forward(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        self.run(inputs, params)?.expval(&self.observable)
    }

    /// Adjoint-mode gradients of `Σ_k upstream[k] · output[k]`.
    ///
    /// One forward pass produces `|φ⟩`; `|λ⟩ = M|φ⟩` with `M` the
    /// upstream-weighted observable. Walking the primitives backwards, each
    /// rotation `exp(−iθP/2)` contributes `Im⟨λ|P|φ⟩`, after which both
    /// vectors are un-rotated.
    pub fn backward(
        &self,
        inputs: &[f64],
        params: &[f64],
        upstream: &[f64],
    ) -> Result<CircuitGrads> {
        let mut phi = self.run(inputs, params)?;
        let diag = self.observable.weighted_diagonal(self.n_qubits, upstream)?;
        let mut lambda = phi.clone();
        lambda.apply_diagonal(&diag)?;

        let mut grad_params = vec![0.0; self.n_params];
        let mut grad_inputs = vec![0.0; self.n_inputs];
        let mut scratch = phi.clone();

        for p in self.prims.iter().rev() {
            let (qubit, angle, is_y) = match *p {
                Prim::Ry(q, a) => (q, a, true),
                Prim::Rz(q, a) => (q, a, false),
                _ => {
                    apply_prim(&mut phi, p, inputs, params, true)?;
                    apply_prim(&mut lambda, p, inputs, params, true)?;
                    continue;
                }
            };
            let slot = match angle {
                Angle::Param(i) => Some(&mut grad_params[i]),
                Angle::Input(i) => Some(&mut grad_inputs[i]),
                Angle::Fixed(_) => None,
            };
            if let Some(g) = slot {
                scratch.amps_mut().copy_from_slice(phi.amps());
                if is_y {
                    scratch.apply_pauli_y(qubit)?;
                } else {
                    scratch.apply_pauli_z(qubit)?;
                }
                *g += lambda.inner(&scratch).im;
            }
            apply_prim(&mut phi, p, inputs, params, true)?;
            apply_prim(&mut lambda, p, inputs, params, true)?;
        }

        if self.encoding == Encoding::Amplitude {
            // λ now sits at the encoded state; d/da_k ⟨a|O|a⟩ = 2 Re λ_k for
            // real amplitudes, then chain through a = x/‖x‖.
            let norm = inputs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let amp_grad: Vec<f64> = lambda.amps()[..self.n_inputs]
                .iter()
                .map(|l| 2.0 * l.re)
                .collect();
            let along: f64 = inputs
                .iter()
                .zip(&amp_grad)
                .map(|(x, g)| x / norm * g)
                .sum();
            for ((gi, x), g) in grad_inputs.iter_mut().zip(inputs).zip(&amp_grad) {
                *gi = (g - x / norm * along) / norm;
            }
        }

        Ok(CircuitGrads {
            inputs: grad_inputs,
            params: grad_params,
        })
    }
}

fn apply_prim(
    state: &mut StateVector,
    p: &Prim,
    inputs: &[f64],
    params: &[f64],
    inverse: bool,
) -> Result<()> {
    let sign = if inverse { -1.0 } else { 1.0 };
    match *p {
        Prim::Ry(q, a) => state.apply_ry(q, sign * a.resolve(inputs, params)),
        Prim::Rz(q, a) => state.apply_rz(q, sign * a.resolve(inputs, params)),
        Prim::Cnot(c, t) => state.apply_cnot(c, t),
        Prim::Cz(a, b) => state.apply_cz(a, b),
    }
}

/// I.i.d. `N(0, (0.01π)²)` draws.
pub fn init_params<R: Rng + ?Sized>(n_params: usize, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, PARAM_INIT_STD).expect("valid std");
    (0..n_params).map(|_| normal.sample(rng)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QnnKind {
    AngRy,
    AngArb,
    AmpGen,
    Qcnn,
}

impl QnnKind {
    pub fn encoding(self) -> Encoding {
        match self {
            QnnKind::AngRy | QnnKind::AngArb => Encoding::Angle,
            QnnKind::AmpGen | QnnKind::Qcnn => Encoding::Amplitude,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QnnKind::AngRy => "Ang-RY",
            QnnKind::AngArb => "Ang-Arb",
            QnnKind::AmpGen => "Amp-Gen",
            QnnKind::Qcnn => "QCNN",
        }
    }
}

/// Observable choice as exposed in experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Local,
    Global,
    /// Fixed single-qubit readout of the QCNN.
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QnnArch {
    pub kind: QnnKind,
    pub entangle: bool,
    pub readout: Readout,
}

impl QnnArch {
    pub fn new(kind: QnnKind, entangle: bool, readout: Readout) -> Result<Self> {
        let arch = Self {
            kind,
            entangle,
            readout,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn qcnn() -> Self {
        Self {
            kind: QnnKind::Qcnn,
            entangle: true,
            readout: Readout::Final,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.entangle, self.readout) {
            (QnnKind::Qcnn, true, Readout::Final) => Ok(()),
            (QnnKind::Qcnn, _, _) => Err(Error::Invalid(
                "QCNN is always entangled with a single final-qubit readout".into(),
            )),
            (_, _, Readout::Final) => Err(Error::Invalid(
                "final-qubit readout is specific to the QCNN".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Qubit count for a latent dimension: 16 → 4, 256 → 8.
    pub fn qubits_for_latent(latent_dim: usize) -> Result<usize> {
        if latent_dim.is_power_of_two() && latent_dim >= 2 {
            Ok(latent_dim.trailing_zeros() as usize)
        } else {
            Err(Error::Invalid(format!(
                "latent dimension {latent_dim} is not a power of two"
            )))
        }
    }

    pub fn build(&self, latent_dim: usize) -> Result<Circuit> {
        self.validate()?;
        let n = Self::qubits_for_latent(latent_dim)?;
        let circuit = match self.kind {
            QnnKind::AngRy => build_ang_ry(n, latent_dim, self.entangle)?,
            QnnKind::AngArb => build_ang_arb(n, latent_dim, self.entangle)?,
            QnnKind::AmpGen => build_amp_gen(n, self.entangle)?,
            QnnKind::Qcnn => return build_qcnn(n),
        };
        circuit.with_observable(match self.readout {
            Readout::Local => Observable::LocalZ,
            _ => Observable::GlobalZ,
        })
    }
}
