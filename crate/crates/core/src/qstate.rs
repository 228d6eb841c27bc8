//! Quantum states on top of [`crate::linalg`]: density matrices, pure
//! states, the depolarizing channel, fidelity, Hilbert–Schmidt distance and
//! Bloch coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, clamp_psd_eigenvalue, hermitian_eig, matmul, ComplexMatrix, C64, ONE,
    ZERO,
};

/// Tolerance for the Hermitian, unit-trace and PSD invariants.
pub const STATE_TOL: f64 = 1e-10;

/// Spectral values below this are round-off inside the fidelity square
/// roots; `√1e-14 = 1e-7` would otherwise leak into the root sum.
const FIDELITY_EIG_FLOOR: f64 = 1e-14;

fn floored_sqrt(lambda: f64) -> Result<f64> {
    let l = clamp_psd_eigenvalue(lambda)?;
    Ok(if l < FIDELITY_EIG_FLOOR { 0.0 } else { l.sqrt() })
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Hermitian, unit-trace, positive semidefinite matrix on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates every invariant, including the spectrum.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let n_qubits = qubits_for_dim(matrix.rows())?;
        let state = Self { n_qubits, matrix };
        state.validate()?;
        Ok(state)
    }

    /// Skips the spectral check; Hermiticity and trace are still asserted in
    /// debug builds.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let n_qubits = matrix.rows().trailing_zeros() as usize;
        debug_assert!(matrix.is_square() && matrix.rows() == 1 << n_qubits);
        let state = Self { n_qubits, matrix };
        debug_assert!(state.check_cheap().is_ok(), "{:?}", state.check_cheap());
        state
    }

    fn check_cheap(&self) -> Result<()> {
        let defect = self.matrix.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = linalg::trace(&self.matrix)?;
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(())
    }

    /// Full invariant check: Hermitian, unit trace, eigenvalues ≥ −1e-10.
    pub fn validate(&self) -> Result<()> {
        self.check_cheap()?;
        let eig = hermitian_eig(&self.matrix)?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -STATE_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // ρ is Hermitian, so tr(ρ²) = Σ |ρ_ij|².
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `ρ_A ⊗ ρ_B`, with `self` in the high-order bits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    /// Keeps the leading `keep` qubits and traces out the rest.
    pub fn keep_leading(&self, keep: usize) -> Result<DensityMatrix> {
        if keep > self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cannot keep {keep} of {} qubits",
                self.n_qubits
            )));
        }
        let dims = (1 << keep, 1 << (self.n_qubits - keep));
        let m = linalg::partial_trace(&self.matrix, dims, linalg::Subsystem::A)?;
        Ok(DensityMatrix::from_matrix_unchecked(m))
    }

    /// Keeps the trailing `keep` qubits and traces out the rest.
    pub fn keep_trailing(&self, keep: usize) -> Result<DensityMatrix> {
        if keep > self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cannot keep {keep} of {} qubits",
                self.n_qubits
            )));
        }
        let dims = (1 << (self.n_qubits - keep), 1 << keep);
        let m = linalg::partial_trace(&self.matrix, dims, linalg::Subsystem::B)?;
        Ok(DensityMatrix::from_matrix_unchecked(m))
    }
}

/// Normalised state vector on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `I / 2^n`.
pub fn completely_mixed(n: usize) -> DensityMatrix {
    let dim = 1usize << n;
    DensityMatrix {
        n_qubits: n,
        matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn from_pure(psi: &PureState) -> DensityMatrix {
    let mut m = ComplexMatrix::outer(&psi.amplitudes, &psi.amplitudes);
    // outer() of a unit vector is Hermitian up to the sign of zero; make
    // the diagonal exactly real.
    let d = m.rows();
    for i in 0..d {
        m[(i, i)].im = 0.0;
    }
    DensityMatrix {
        n_qubits: psi.n_qubits,
        matrix: m,
    }
}

/// `Σ p_i |ψ_i⟩⟨ψ_i|`.
pub fn mix(states: &[PureState], probs: &[f64]) -> Result<DensityMatrix> {
    if states.is_empty() || states.len() != probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} states but {} probabilities",
            states.len(),
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "mixture probability {p} is not positive"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidArgument(format!(
            "mixture probabilities sum to {total}"
        )));
    }
    let n = states[0].n_qubits;
    if states.iter().any(|s| s.n_qubits != n) {
        return Err(Error::DimensionMismatch(
            "mixture components have different qubit counts".into(),
        ));
    }
    let mut acc = ComplexMatrix::zeros(1 << n, 1 << n);
    for (psi, &p) in states.iter().zip(probs) {
        acc = acc.add(&from_pure(psi).matrix.scale_real(p))?;
    }
    Ok(DensityMatrix::from_matrix_unchecked(acc.hermitian_part()))
}

/// Depolarizing channel `(1 − α)·I/d + α·ρ`.
pub fn depolarize(rho: &DensityMatrix, alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "depolarizing strength {alpha} outside [0, 1]"
        )));
    }
    let d = rho.dim();
    let shift = (1.0 - alpha) / d as f64;
    let mut m = rho.matrix.scale_real(alpha);
    for i in 0..d {
        m[(i, i)] += shift;
    }
    Ok(DensityMatrix {
        n_qubits: rho.n_qubits,
        matrix: m,
    })
}

/// Precomputed `√ρ`, for evaluating `F(ρ, ·)` against many states.
#[derive(Debug, Clone)]
pub struct FidelityReference {
    sqrt_rho: ComplexMatrix,
}

impl FidelityReference {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        let eig = hermitian_eig(rho.matrix())?;
        for &l in &eig.eigenvalues {
            floored_sqrt(l)?;
        }
        Ok(Self {
            sqrt_rho: eig.reconstruct_with(|l| floored_sqrt(l).unwrap_or(0.0)),
        })
    }

    pub fn dim(&self) -> usize {
        self.sqrt_rho.rows()
    }

    /// `(tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
    pub fn fidelity(&self, sigma: &DensityMatrix) -> Result<f64> {
        if sigma.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fidelity between dimensions {} and {}",
                self.dim(),
                sigma.dim()
            )));
        }
        let inner = matmul(&matmul(&self.sqrt_rho, sigma.matrix())?, &self.sqrt_rho)?;
        let eig = hermitian_eig(&inner.hermitian_part())?;
        let mut root_sum = 0.0;
        for &l in &eig.eigenvalues {
            root_sum += floored_sqrt(l)?;
        }
        Ok((root_sum * root_sum).clamp(0.0, 1.0))
    }
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    FidelityReference::new(rho)?.fidelity(sigma)
}

/// Hilbert–Schmidt distance `√tr[(ρ − σ)²]`.
pub fn hs_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let diff = rho.matrix.sub(&sigma.matrix)?;
    let sq = matmul(&diff, &diff)?;
    Ok(linalg::trace(&sq)?.re.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Angle between two Bloch vectors, in radians.
    pub fn angle_to(&self, other: &BlochVector) -> f64 {
        let dot = self.x * other.x + self.y * other.y + self.z * other.z;
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (dot / denom).clamp(-1.0, 1.0).acos()
    }
}

/// `(tr ρX, tr ρY, tr ρZ)` of a single-qubit state.
pub fn bloch_coordinates(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.n_qubits != 1 {
        return Err(Error::InvalidArgument(format!(
            "Bloch coordinates need one qubit, got {}",
            rho.n_qubits
        )));
    }
    let m = &rho.matrix;
    let off = m[(0, 1)];
    Ok(BlochVector {
        // tr(ρX) = ρ01 + ρ10 = 2 Re ρ01; tr(ρY) = i(ρ01 − ρ10) = −2 Im ρ01
        x: 2.0 * off.re,
        y: -2.0 * off.im,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}
