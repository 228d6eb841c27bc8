//! Generation: run the trained backward process from `I/d` down to `t = 1`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::denoise::BackwardModel;
use crate::diffusion::{forward_to, NoiseSchedule};
use crate::error::{Error, Result};
use crate::qstate::{bloch_coordinates, completely_mixed, BlochVector, DensityMatrix, FidelityReference};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStep {
    pub t: usize,
    /// Fidelity to the reference after the backward step at `t`.
    pub fidelity: Option<f64>,
    /// Single-qubit runs only.
    pub bloch: Option<BlochVector>,
}

#[derive(Debug, Clone)]
pub struct GenerationTrace {
    /// `t = T, T−1, …, 1`.
    pub steps: Vec<GenerationStep>,
    pub final_state: DensityMatrix,
}

impl GenerationTrace {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.steps.last().and_then(|s| s.fidelity)
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.fidelity).collect()
    }

    /// `t,fidelity[,x,y,z]`; an empty field when no reference was given.
    pub fn to_csv(&self) -> String {
        let with_bloch = self.steps.iter().any(|s| s.bloch.is_some());
        let mut out = String::from(if with_bloch { "t,fidelity,x,y,z\n" } else { "t,fidelity\n" });
        for s in &self.steps {
            let _ = write!(out, "{},", s.t);
            if let Some(f) = s.fidelity {
                let _ = write!(out, "{f:e}");
            }
            if let Some(b) = s.bloch {
                let _ = write!(out, ",{:e},{:e},{:e}", b.x, b.y, b.z);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Iterates `ρ̃ ← f(ρ̃, t)` for `t = T..=1` starting from `I/d`. The
/// reference only feeds the recorded fidelities.
pub fn generate(model: &BackwardModel, reference: Option<&DensityMatrix>) -> Result<GenerationTrace> {
    let arch = model.architecture();
    if arch.steps == 0 {
        return Err(Error::InvalidArgument("model has no timesteps".into()));
    }
    let reference = match reference {
        Some(r) if r.n_qubits() != arch.n => {
            return Err(Error::DimensionMismatch(format!(
                "reference has {} qubits, model generates {}",
                r.n_qubits(),
                arch.n
            )))
        }
        Some(r) => Some(FidelityReference::new(r)?),
        None => None,
    };
    let mut state = completely_mixed(arch.n);
    let mut steps = Vec::with_capacity(arch.steps);
    for t in (1..=arch.steps).rev() {
        state = model.backward(&state, t)?;
        let fidelity = reference.as_ref().map(|r| r.fidelity(&state)).transpose()?;
        let bloch = if arch.n == 1 {
            Some(bloch_coordinates(&state)?)
        } else {
            None
        };
        steps.push(GenerationStep { t, fidelity, bloch });
    }
    Ok(GenerationTrace {
        steps,
        final_state: state,
    })
}

/// `F(ρ_t, ρ₀)` for `t = 1..=T` along the forward process.
pub fn diffusion_reference_curve(rho0: &DensityMatrix, sched: &NoiseSchedule) -> Result<Vec<f64>> {
    let reference = FidelityReference::new(rho0)?;
    (1..=sched.steps())
        .map(|t| reference.fidelity(&forward_to(rho0, t, sched)?))
        .collect()
}

/// JSON record of a density matrix: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixRecord {
    pub n_qubits: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&DensityMatrix> for DensityMatrixRecord {
    fn from(rho: &DensityMatrix) -> Self {
        Self {
            n_qubits: rho.n_qubits(),
            data: rho.matrix().as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl DensityMatrixRecord {
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let dim = 1usize << self.n_qubits;
        let data = self.data.iter().map(|&[re, im]| crate::linalg::C64::new(re, im)).collect();
        DensityMatrix::new(crate::linalg::ComplexMatrix::from_vec(dim, dim, data)?)
    }
}

pub fn write_state_json(rho: &DensityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&DensityMatrixRecord::from(rho)).expect("state serialises");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_state_json(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: DensityMatrixRecord = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    record.to_density_matrix()
}
