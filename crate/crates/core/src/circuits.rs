//! Parameterized circuit templates and their action on states.
//!
//! Gates are applied in place with strided index loops, one 2×2 or 4×4 block
//! at a time. [`gate_operator`] builds the full `2^n × 2^n` operator through
//! Kronecker products with identities; it is the slow reference route used
//! to cross-check the fast one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, matmul, ComplexMatrix, C64, ONE, ZERO};
use crate::qstate::{self, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    RX,
    RY,
    RZ,
    ZZ,
    XX,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::ZZ | GateKind::XX => 2,
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RX" => Ok(GateKind::RX),
            "RY" => Ok(GateKind::RY),
            "RZ" => Ok(GateKind::RZ),
            "ZZ" => Ok(GateKind::ZZ),
            "XX" => Ok(GateKind::XX),
            _ => Err(Error::UnknownGate(s.to_string())),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where a gate angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamSource {
    /// Index into the trainable parameter vector.
    Trainable(usize),
    /// The scalar input supplied at application time (e.g. `t′ = tπ/T`).
    Input,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: ParamSource,
}

impl GateSpec {
    pub fn one(kind: GateKind, qubit: usize, param: ParamSource) -> Self {
        Self {
            kind,
            qubits: vec![qubit],
            param,
        }
    }

    pub fn two(kind: GateKind, a: usize, b: usize, param: ParamSource) -> Self {
        Self {
            kind,
            qubits: vec![a, b],
            param,
        }
    }

    fn angle(&self, params: &[f64], input: f64) -> f64 {
        match self.param {
            ParamSource::Trainable(i) => params[i],
            ParamSource::Input => input,
        }
    }
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitTemplate {
    n_qubits: usize,
    gates: Vec<GateSpec>,
    n_params: usize,
}

impl CircuitTemplate {
    pub fn new(n_qubits: usize, gates: Vec<GateSpec>) -> Result<Self> {
        let mut max_index: Option<usize> = None;
        let mut seen = Vec::new();
        for (pos, gate) in gates.iter().enumerate() {
            if gate.qubits.len() != gate.kind.arity() {
                return Err(Error::InvalidCircuit(format!(
                    "gate {pos} ({}) acts on {} qubits, expected {}",
                    gate.kind,
                    gate.qubits.len(),
                    gate.kind.arity()
                )));
            }
            if let Some(&q) = gate.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {pos} targets qubit {q} of a {n_qubits}-qubit register"
                )));
            }
            if gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
                return Err(Error::InvalidCircuit(format!(
                    "gate {pos} repeats qubit {}",
                    gate.qubits[0]
                )));
            }
            if let ParamSource::Trainable(i) = gate.param {
                if seen.len() <= i {
                    seen.resize(i + 1, false);
                }
                seen[i] = true;
                max_index = Some(max_index.map_or(i, |m| m.max(i)));
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidCircuit(format!(
                "trainable index {missing} is never used"
            )));
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params: max_index.map_or(0, |m| m + 1),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    /// Same gates in reverse order. Applied with negated parameters and a
    /// negated input it undoes `self`.
    pub fn reversed(&self) -> Self {
        let mut gates = self.gates.clone();
        gates.reverse();
        Self {
            n_qubits: self.n_qubits,
            gates,
            n_params: self.n_params,
        }
    }

    fn check(&self, params: &[f64], n_qubits: usize) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::DimensionMismatch(format!(
                "circuit takes {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "circuit acts on {} qubits, state has {n_qubits}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Full unitary of the circuit, built gate by gate through
    /// [`gate_operator`].
    pub fn unitary(&self, params: &[f64], input: f64) -> Result<ComplexMatrix> {
        self.check(params, self.n_qubits)?;
        let mut u = ComplexMatrix::identity(1 << self.n_qubits);
        for gate in &self.gates {
            let g = gate_operator(gate.kind, gate.angle(params, input), &gate.qubits, self.n_qubits)?;
            u = matmul(&g, &u)?;
        }
        Ok(u)
    }
}

/// `R_P(φ) = exp(−iφP/2)` for single-qubit kinds, `exp(−iφ(P⊗P)/2)` for
/// two-qubit kinds.
pub fn gate_unitary(kind: GateKind, angle: f64) -> ComplexMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let cc = C64::new(c, 0.0);
    let mis = C64::new(0.0, -s);
    let lo = C64::new(c, -s); // e^{-iφ/2}
    let hi = C64::new(c, s); // e^{+iφ/2}
    match kind {
        GateKind::RX => ComplexMatrix::from_rows(&[&[cc, mis], &[mis, cc]]),
        GateKind::RY => ComplexMatrix::from_rows(&[
            &[cc, C64::new(-s, 0.0)],
            &[C64::new(s, 0.0), cc],
        ]),
        GateKind::RZ => ComplexMatrix::from_rows(&[&[lo, ZERO], &[ZERO, hi]]),
        GateKind::ZZ => ComplexMatrix::from_rows(&[
            &[lo, ZERO, ZERO, ZERO],
            &[ZERO, hi, ZERO, ZERO],
            &[ZERO, ZERO, hi, ZERO],
            &[ZERO, ZERO, ZERO, lo],
        ]),
        GateKind::XX => ComplexMatrix::from_rows(&[
            &[cc, ZERO, ZERO, mis],
            &[ZERO, cc, mis, ZERO],
            &[ZERO, mis, cc, ZERO],
            &[mis, ZERO, ZERO, cc],
        ]),
    }
}

/// Embeds a gate into an `n`-qubit register as a full operator.
///
/// Single-qubit gates become `I ⊗ … ⊗ G ⊗ … ⊗ I`. Two-qubit gates are placed
/// on adjacent positions and conjugated by the basis permutation that moves
/// the target qubits there.
pub fn gate_operator(
    kind: GateKind,
    angle: f64,
    qubits: &[usize],
    n: usize,
) -> Result<ComplexMatrix> {
    if qubits.len() != kind.arity() || qubits.iter().any(|&q| q >= n) {
        return Err(Error::InvalidCircuit(format!(
            "{kind} on qubits {qubits:?} of a {n}-qubit register"
        )));
    }
    let g = gate_unitary(kind, angle);
    let identity = |k: usize| ComplexMatrix::identity(1 << k);
    match *qubits {
        [q] => Ok(kron(&kron(&identity(q), &g), &identity(n - q - 1))),
        [a, b] => {
            if a == b {
                return Err(Error::InvalidCircuit(format!("{kind} repeats qubit {a}")));
            }
            // Act on qubits (0, 1) after a permutation sending a → 0, b → 1.
            let local = kron(&g, &identity(n - 2));
            let mut order: Vec<usize> = vec![a, b];
            order.extend((0..n).filter(|&q| q != a && q != b));
            let p = permutation_operator(&order, n);
            matmul(&matmul(&p.adjoint(), &local)?, &p)
        }
        _ => unreachable!(),
    }
}

/// Unitary `P` with `P|x⟩ = |y⟩`, where bit `i` of `y` (qubit `i`) is bit
/// `order[i]` of `x`.
fn permutation_operator(order: &[usize], n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let mut p = ComplexMatrix::zeros(dim, dim);
    for x in 0..dim {
        let mut y = 0;
        for (i, &src) in order.iter().enumerate() {
            y |= bit(x, src) << (n - 1 - i);
        }
        p[(y, x)] = ONE;
    }
    p
}

/// Offsets of the basis states touched by a gate, relative to a base index
/// whose target bits are zero, ordered as the gate's local basis.
fn block_offsets(qubits: &[usize], n: usize) -> ([usize; 4], usize) {
    let stride = |q: usize| 1usize << (n - 1 - q);
    match *qubits {
        [q] => ([0, stride(q), 0, 0], 2),
        [a, b] => {
            let (sa, sb) = (stride(a), stride(b));
            ([0, sb, sa, sa + sb], 4)
        }
        _ => unreachable!(),
    }
}

fn target_mask(qubits: &[usize], n: usize) -> usize {
    qubits.iter().map(|&q| 1usize << (n - 1 - q)).sum()
}

/// `v ← G v` on one strided block family of a vector.
fn apply_to_vector(v: &mut [C64], g: &ComplexMatrix, qubits: &[usize], n: usize) {
    let (offsets, m) = block_offsets(qubits, n);
    let mask = target_mask(qubits, n);
    let g = g.as_slice();
    let mut buf = [ZERO; 4];
    for base in (0..v.len()).filter(|b| b & mask == 0) {
        for (k, slot) in buf.iter_mut().enumerate().take(m) {
            *slot = v[base + offsets[k]];
        }
        for r in 0..m {
            let mut acc = ZERO;
            for k in 0..m {
                acc += g[r * m + k] * buf[k];
            }
            v[base + offsets[r]] = acc;
        }
    }
}

/// `ρ ← G ρ G†` for a gate acting on `qubits`.
fn conjugate_in_place(rho: &mut [C64], dim: usize, g: &ComplexMatrix, qubits: &[usize], n: usize) {
    let (offsets, m) = block_offsets(qubits, n);
    let mask = target_mask(qubits, n);
    let gs = g.as_slice();
    let bases: Vec<usize> = (0..dim).filter(|b| b & mask == 0).collect();
    let mut buf = [ZERO; 4];
    // Left multiplication: mix rows within each block, for every column.
    for col in 0..dim {
        for &base in &bases {
            for k in 0..m {
                buf[k] = rho[(base + offsets[k]) * dim + col];
            }
            for r in 0..m {
                let mut acc = ZERO;
                for k in 0..m {
                    acc += gs[r * m + k] * buf[k];
                }
                rho[(base + offsets[r]) * dim + col] = acc;
            }
        }
    }
    // Right multiplication by G†: (ρG†)[row, j] = Σ_k ρ[row, k]·conj(G[j, k]).
    for row in 0..dim {
        let line = &mut rho[row * dim..(row + 1) * dim];
        for &base in &bases {
            for k in 0..m {
                buf[k] = line[base + offsets[k]];
            }
            for j in 0..m {
                let mut acc = ZERO;
                for k in 0..m {
                    acc += buf[k] * gs[j * m + k].conj();
                }
                line[base + offsets[j]] = acc;
            }
        }
    }
}

/// `ρ ↦ UρU†` for the circuit `U(params, input)`.
pub fn apply_circuit(
    template: &CircuitTemplate,
    params: &[f64],
    input: f64,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    template.check(params, rho.n_qubits())?;
    let n = template.n_qubits;
    let dim = rho.dim();
    let mut m = rho.matrix().clone();
    for gate in &template.gates {
        let g = gate_unitary(gate.kind, gate.angle(params, input));
        conjugate_in_place(m.as_mut_slice(), dim, &g, &gate.qubits, n);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m.hermitian_part()))
}

/// `|ψ⟩ ↦ U|ψ⟩`.
pub fn apply_circuit_to_state(
    template: &CircuitTemplate,
    params: &[f64],
    input: f64,
    psi: &PureState,
) -> Result<PureState> {
    template.check(params, psi.n_qubits())?;
    let n = template.n_qubits;
    let mut out = psi.clone();
    for gate in &template.gates {
        let g = gate_unitary(gate.kind, gate.angle(params, input));
        apply_to_vector(out.amplitudes_mut(), &g, &gate.qubits, n);
    }
    Ok(out)
}

/// Nearest-neighbour ring on `n` qubits: none for one qubit, a single edge
/// for two, `(i, i+1 mod n)` otherwise.
fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

struct ParamCounter(usize);

impl ParamCounter {
    fn next(&mut self) -> ParamSource {
        let p = ParamSource::Trainable(self.0);
        self.0 += 1;
        p
    }
}

/// Timestep-embedding ansatz: per layer, `RX(t′)` then `RY(ω)` on every
/// qubit, followed by a ring of `ZZ(ω)` entanglers.
pub fn timestep_embedding_template(n_tau: usize, layers: usize) -> Result<CircuitTemplate> {
    if n_tau == 0 || layers == 0 {
        return Err(Error::InvalidArgument(
            "embedding circuit needs at least one qubit and one layer".into(),
        ));
    }
    let mut p = ParamCounter(0);
    let mut gates = Vec::new();
    for _ in 0..layers {
        for q in 0..n_tau {
            gates.push(GateSpec::one(GateKind::RX, q, ParamSource::Input));
            gates.push(GateSpec::one(GateKind::RY, q, p.next()));
        }
        for (a, b) in ring_edges(n_tau) {
            gates.push(GateSpec::two(GateKind::ZZ, a, b, p.next()));
        }
    }
    CircuitTemplate::new(n_tau, gates)
}

/// Denoising ansatz: per layer, `RZ RX RZ` on every qubit, then `XX` on
/// every unordered pair.
pub fn denoising_template(n: usize, layers: usize) -> Result<CircuitTemplate> {
    if n == 0 || layers == 0 {
        return Err(Error::InvalidArgument(
            "denoising circuit needs at least one qubit and one layer".into(),
        ));
    }
    let mut p = ParamCounter(0);
    let mut gates = Vec::new();
    for _ in 0..layers {
        for q in 0..n {
            gates.push(GateSpec::one(GateKind::RZ, q, p.next()));
            gates.push(GateSpec::one(GateKind::RX, q, p.next()));
            gates.push(GateSpec::one(GateKind::RZ, q, p.next()));
        }
        for a in 0..n {
            for b in (a + 1)..n {
                gates.push(GateSpec::two(GateKind::XX, a, b, p.next()));
            }
        }
    }
    CircuitTemplate::new(n, gates)
}

/// Target-preparation ansatz: per layer, `RY RZ` on every qubit and a ring
/// of `ZZ` entanglers.
pub fn preparation_template(n: usize, layers: usize) -> Result<CircuitTemplate> {
    if n == 0 || layers == 0 {
        return Err(Error::InvalidArgument(
            "preparation circuit needs at least one qubit and one layer".into(),
        ));
    }
    let mut p = ParamCounter(0);
    let mut gates = Vec::new();
    for _ in 0..layers {
        for q in 0..n {
            gates.push(GateSpec::one(GateKind::RY, q, p.next()));
            gates.push(GateSpec::one(GateKind::RZ, q, p.next()));
        }
        for (a, b) in ring_edges(n) {
            gates.push(GateSpec::two(GateKind::ZZ, a, b, p.next()));
        }
    }
    CircuitTemplate::new(n, gates)
}

/// Default depth of the target-preparation circuit.
pub const DEFAULT_PREP_LAYERS: usize = 2;

/// Random pure state from the preparation circuit with angles drawn from
/// `U(0, π)`, applied to `|0…0⟩`.
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, layers: usize, rng: &mut R) -> Result<PureState> {
    let template = preparation_template(n, layers)?;
    let params: Vec<f64> = (0..template.n_params())
        .map(|_| rng.random_range(0.0..=PI))
        .collect();
    apply_circuit_to_state(&template, &params, 0.0, &PureState::basis(n, 0)?)
}

/// Mixture of `k` random pure states with weights `softmax(u)`,
/// `u_i ~ U(0, 1]`.
pub fn random_mixed_state<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    layers: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "a mixed target needs at least two components, got {k}"
        )));
    }
    let states = (0..k)
        .map(|_| random_pure_state(n, layers, rng))
        .collect::<Result<Vec<_>>>()?;
    // random::<f64>() is in [0, 1); flip it onto (0, 1].
    let draws: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    let z: f64 = draws.iter().map(|u| u.exp()).sum();
    let probs: Vec<f64> = draws.iter().map(|u| u.exp() / z).collect();
    qstate::mix(&states, &probs)
}
