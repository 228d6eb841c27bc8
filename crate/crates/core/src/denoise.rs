//! Trainable backward process `f_Θ(ρ_t, t)`.
//!
//! Three variants share the timestep-embedding circuit:
//!
//! * [`Variant::Qgdm`]: `U(θ)` acts on `τ_t ⊗ ρ_t`; the leading `n` qubits
//!   are kept and the rest traced out.
//! * [`Variant::Rqgdm`]: `U₁(θ₁)` compresses `ρ_t` onto its last qubit, which
//!   joins an `n`-qubit `τ_t` under `U₂(θ₂)`; the last qubit is discarded.
//! * [`Variant::Naive`]: like QGDM, but the whole embedding register is
//!   traced out, so the output lives on the original `ρ_t` qubits. This
//!   design collapses to copying its input and exists to reproduce that
//!   failure.
//!
//! The embedding register always occupies the high-order bits.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    apply_circuit, apply_circuit_to_state, denoising_template, timestep_embedding_template,
    CircuitTemplate,
};
use crate::error::{Error, Result};
use crate::qstate::{self, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Qgdm,
    Rqgdm,
    Naive,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qgdm" => Ok(Variant::Qgdm),
            "rqgdm" => Ok(Variant::Rqgdm),
            "naive" => Ok(Variant::Naive),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant `{other}` (expected qgdm, rqgdm or naive)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Qgdm => "qgdm",
            Variant::Rqgdm => "rqgdm",
            Variant::Naive => "naive",
        })
    }
}

/// Shape of a backward model; everything needed to rebuild its circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub variant: Variant,
    /// Target qubits.
    pub n: usize,
    /// Embedding qubits. RQGDM requires `n_tau == n`.
    pub n_tau: usize,
    /// Diffusion steps `T`.
    pub steps: usize,
    pub embed_layers: usize,
    pub denoise_layers: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_tau == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one target and one embedding qubit".into(),
            ));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("model needs T ≥ 1 timesteps".into()));
        }
        if self.embed_layers == 0 || self.denoise_layers == 0 {
            return Err(Error::InvalidArgument("layer counts must be ≥ 1".into()));
        }
        if self.variant == Variant::Rqgdm {
            if self.n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "rqgdm needs n ≥ 2 target qubits, got {}",
                    self.n
                )));
            }
            if self.n_tau != self.n {
                return Err(Error::InvalidArgument(format!(
                    "rqgdm uses an n-qubit embedding register (n_tau = {}), got {}",
                    self.n, self.n_tau
                )));
            }
        }
        Ok(())
    }
}

/// Trainable angles: `ω` for the embedding circuit, `θ` for the denoising
/// circuit. For RQGDM `theta` holds `θ₁` (compression, `U₁`) and `theta2`
/// holds `θ₂` (`U₂`); otherwise `theta2` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta2: Vec<f64>,
}

impl ModelParams {
    pub fn len(&self) -> usize {
        self.omega.len() + self.theta.len() + self.theta2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ω ‖ θ ‖ θ₂`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.omega);
        v.extend_from_slice(&self.theta);
        v.extend_from_slice(&self.theta2);
        v
    }

    fn overwrite_from_flat(&mut self, flat: &[f64]) {
        let (a, rest) = flat.split_at(self.omega.len());
        let (b, c) = rest.split_at(self.theta.len());
        self.omega.copy_from_slice(a);
        self.theta.copy_from_slice(b);
        self.theta2.copy_from_slice(c);
    }
}

#[derive(Debug, Clone)]
pub struct BackwardModel {
    arch: Architecture,
    embed: CircuitTemplate,
    /// `U(θ)` for QGDM and naive; `U₂(θ₂)` for RQGDM.
    denoise: CircuitTemplate,
    /// `U₁(θ₁)`, RQGDM only.
    compress: Option<CircuitTemplate>,
    params: ModelParams,
}

impl BackwardModel {
    pub fn new(arch: Architecture, params: ModelParams) -> Result<Self> {
        let mut model = Self::with_zero_params(arch)?;
        let want = (
            model.params.omega.len(),
            model.params.theta.len(),
            model.params.theta2.len(),
        );
        let got = (params.omega.len(), params.theta.len(), params.theta2.len());
        if want != got {
            return Err(Error::DimensionMismatch(format!(
                "{} model expects (ω, θ, θ₂) lengths {want:?}, got {got:?}",
                arch.variant
            )));
        }
        model.params = params;
        Ok(model)
    }

    /// All angles zero: every circuit is the identity.
    pub fn with_zero_params(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let embed = timestep_embedding_template(arch.n_tau, arch.embed_layers)?;
        let (denoise, compress) = match arch.variant {
            Variant::Qgdm | Variant::Naive => (
                denoising_template(arch.n_tau + arch.n, arch.denoise_layers)?,
                None,
            ),
            Variant::Rqgdm => (
                denoising_template(arch.n + 1, arch.denoise_layers)?,
                Some(denoising_template(arch.n, arch.denoise_layers)?),
            ),
        };
        let params = match &compress {
            None => ModelParams {
                omega: vec![0.0; embed.n_params()],
                theta: vec![0.0; denoise.n_params()],
                theta2: Vec::new(),
            },
            Some(u1) => ModelParams {
                omega: vec![0.0; embed.n_params()],
                theta: vec![0.0; u1.n_params()],
                theta2: vec![0.0; denoise.n_params()],
            },
        };
        Ok(Self {
            arch,
            embed,
            denoise,
            compress,
            params,
        })
    }

    /// Every angle drawn from `U(0, π)`, in the order `ω, θ, θ₂`.
    pub fn random_init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut model = Self::with_zero_params(arch)?;
        let flat: Vec<f64> = (0..model.n_params())
            .map(|_| rng.random_range(0.0..=PI))
            .collect();
        model.params.overwrite_from_flat(&flat);
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn variant(&self) -> Variant {
        self.arch.variant
    }

    pub fn steps(&self) -> usize {
        self.arch.steps
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params.to_flat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        self.params.overwrite_from_flat(flat);
        Ok(())
    }

    pub fn embedding_template(&self) -> &CircuitTemplate {
        &self.embed
    }

    pub fn denoising_template(&self) -> &CircuitTemplate {
        &self.denoise
    }

    pub fn compression_template(&self) -> Option<&CircuitTemplate> {
        self.compress.as_ref()
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.arch.steps {
            return Err(Error::TimestepOutOfRange {
                t,
                steps: self.arch.steps,
            });
        }
        Ok(())
    }

    fn check_input(&self, rho_t: &DensityMatrix) -> Result<()> {
        if rho_t.n_qubits() != self.arch.n {
            return Err(Error::DimensionMismatch(format!(
                "model denoises {}-qubit states, got {} qubits",
                self.arch.n,
                rho_t.n_qubits()
            )));
        }
        Ok(())
    }

    /// `t′ = tπ/T`.
    pub fn embedding_angle(&self, t: usize) -> f64 {
        t as f64 * PI / self.arch.steps as f64
    }

    /// `𝒯(ω, t′)|0…0⟩`.
    pub fn embed_state(&self, t: usize) -> Result<PureState> {
        self.check_t(t)?;
        let zero = PureState::basis(self.arch.n_tau, 0)?;
        apply_circuit_to_state(&self.embed, &self.params.omega, self.embedding_angle(t), &zero)
    }

    /// Timestep embedding state `τ_t`.
    pub fn embed_timestep(&self, t: usize) -> Result<DensityMatrix> {
        Ok(qstate::from_pure(&self.embed_state(t)?))
    }

    /// Predicts `ρ_{t−1}` from `ρ_t` with whichever variant this model is.
    pub fn backward(&self, rho_t: &DensityMatrix, t: usize) -> Result<DensityMatrix> {
        match self.arch.variant {
            Variant::Qgdm => self.backward_qgdm(rho_t, t),
            Variant::Rqgdm => self.backward_rqgdm(rho_t, t),
            Variant::Naive => self.backward_naive(rho_t, t),
        }
    }

    fn expect_variant(&self, v: Variant) -> Result<()> {
        if self.arch.variant != v {
            return Err(Error::InvalidArgument(format!(
                "{v} backward step called on a {} model",
                self.arch.variant
            )));
        }
        Ok(())
    }

    /// Joint input `τ_t ⊗ ρ_t` of the denoising circuit and its image under
    /// `U(θ)`. For RQGDM the input is `τ_t ⊗ ρ′_t` and the circuit is `U₂`.
    pub fn denoiser_io(&self, rho_t: &DensityMatrix, t: usize) -> Result<(DensityMatrix, DensityMatrix)> {
        self.check_t(t)?;
        self.check_input(rho_t)?;
        let tau = self.embed_timestep(t)?;
        let (joint, params) = match &self.compress {
            None => (tau.tensor(rho_t), &self.params.theta),
            Some(u1) => {
                let compressed = apply_circuit(u1, &self.params.theta, 0.0, rho_t)?;
                let last = compressed.keep_trailing(1)?;
                (tau.tensor(&last), &self.params.theta2)
            }
        };
        let out = apply_circuit(&self.denoise, params, 0.0, &joint)?;
        Ok((joint, out))
    }

    /// `tr_B[U(θ)(τ_t ⊗ ρ_t)U†(θ)]`, keeping the leading `n` qubits.
    pub fn backward_qgdm(&self, rho_t: &DensityMatrix, t: usize) -> Result<DensityMatrix> {
        self.expect_variant(Variant::Qgdm)?;
        let (_, out) = self.denoiser_io(rho_t, t)?;
        out.keep_leading(self.arch.n)
    }

    /// `ρ′_t = tr_{1..n−1}[U₁ρ_tU₁†]`, then `tr_last[U₂(τ_t ⊗ ρ′_t)U₂†]`.
    pub fn backward_rqgdm(&self, rho_t: &DensityMatrix, t: usize) -> Result<DensityMatrix> {
        self.expect_variant(Variant::Rqgdm)?;
        let (_, out) = self.denoiser_io(rho_t, t)?;
        out.keep_leading(self.arch.n)
    }

    /// Traces out the embedding register after `U(θ)`.
    pub fn backward_naive(&self, rho_t: &DensityMatrix, t: usize) -> Result<DensityMatrix> {
        self.expect_variant(Variant::Naive)?;
        let (_, out) = self.denoiser_io(rho_t, t)?;
        out.keep_trailing(self.arch.n)
    }

    /// Hilbert–Schmidt distance between the denoising circuit's input and
    /// output at timestep `t`.
    pub fn denoiser_hs_distance(&self, rho_t: &DensityMatrix, t: usize) -> Result<f64> {
        let (input, output) = self.denoiser_io(rho_t, t)?;
        qstate::hs_distance(&input, &output)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk model record. JSON floats round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub architecture: Architecture,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn from_model(model: &BackwardModel) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            architecture: model.arch,
            params: model.params.clone(),
        }
    }

    pub fn into_model(self) -> Result<BackwardModel> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion(self.format_version));
        }
        BackwardModel::new(self.architecture, self.params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::parse(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::random_mixed_state;
    use crate::linalg::{matmul, ComplexMatrix, ONE};
    use crate::qstate::completely_mixed;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch(variant: Variant, n: usize, n_tau: usize) -> Architecture {
        Architecture {
            variant,
            n,
            n_tau,
            steps: 30,
            embed_layers: 5,
            denoise_layers: 1,
        }
    }

    fn random_state(seed: u64, n: usize) -> DensityMatrix {
        random_mixed_state(n, 2, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    /// U ρ U† on the full operator, then partial trace by explicit index
    /// summation, keeping `keep_leading` qubits or the trailing ones.
    fn conjugate_and_reduce(
        u: &ComplexMatrix,
        rho: &ComplexMatrix,
        total: usize,
        kept: usize,
        leading: bool,
    ) -> ComplexMatrix {
        let full = matmul(&matmul(u, rho).unwrap(), &u.adjoint()).unwrap();
        let dk = 1 << kept;
        let dt = 1 << (total - kept);
        let mut out = ComplexMatrix::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                for k in 0..dt {
                    let (r, c) = if leading {
                        (i * dt + k, j * dt + k)
                    } else {
                        (k * dk + i, k * dk + j)
                    };
                    out[(i, j)] += full[(r, c)];
                }
            }
        }
        out
    }

    #[test]
    fn parameter_counts() {
        let m = BackwardModel::with_zero_params(arch(Variant::Qgdm, 1, 1)).unwrap();
        assert_eq!(m.params().omega.len(), 5);
        assert_eq!(m.params().theta.len(), 7);
        let m = BackwardModel::with_zero_params(arch(Variant::Rqgdm, 2, 2)).unwrap();
        assert_eq!(m.params().omega.len(), 15);
        assert_eq!(m.params().theta.len(), 7);
        assert_eq!(m.params().theta2.len(), 12);
        assert_eq!(m.n_params(), 34);
    }

    #[test]
    fn architecture_validation() {
        assert!(BackwardModel::with_zero_params(arch(Variant::Rqgdm, 1, 1)).is_err());
        assert!(BackwardModel::with_zero_params(arch(Variant::Rqgdm, 2, 1)).is_err());
        assert!(BackwardModel::with_zero_params(arch(Variant::Qgdm, 2, 0)).is_err());
        let bad = ModelParams {
            omega: vec![0.0; 5],
            theta: vec![0.0; 6],
            theta2: vec![],
        };
        assert!(BackwardModel::new(arch(Variant::Qgdm, 1, 1), bad).is_err());
    }

    #[test]
    fn embedding_states_are_pure_and_deterministic() {
        let m = BackwardModel::random_init(arch(Variant::Qgdm, 2, 2), &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        for t in [1, 7, 30] {
            let tau = m.embed_timestep(t).unwrap();
            assert!((tau.purity() - 1.0).abs() < 1e-10);
            assert_eq!(tau, m.embed_timestep(t).unwrap());
        }
        assert!(m.embed_timestep(0).is_err());
        assert!(m.embed_timestep(31).is_err());
    }

    #[test]
    fn identity_qgdm_returns_embedding_marginal() {
        let m = BackwardModel::random_init(arch(Variant::Qgdm, 2, 2), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        let mut zeroed = m.clone();
        let mut flat = m.flat_params();
        let omega_len = m.params().omega.len();
        flat[omega_len..].iter_mut().for_each(|p| *p = 0.0);
        zeroed.set_flat_params(&flat).unwrap();
        let rho = random_state(3, 2);
        let out = zeroed.backward(&rho, 12).unwrap();
        let tau = zeroed.embed_timestep(12).unwrap();
        assert!(out.matrix().distance(tau.matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn identity_rqgdm_returns_embedding() {
        let m = BackwardModel::random_init(arch(Variant::Rqgdm, 2, 2), &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        let mut zeroed = m.clone();
        let mut flat = m.flat_params();
        let omega_len = m.params().omega.len();
        flat[omega_len..].iter_mut().for_each(|p| *p = 0.0);
        zeroed.set_flat_params(&flat).unwrap();
        let out = zeroed.backward(&random_state(5, 2), 3).unwrap();
        let tau = zeroed.embed_timestep(3).unwrap();
        assert!(out.matrix().distance(tau.matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn identity_naive_copies_input() {
        let m = BackwardModel::random_init(arch(Variant::Naive, 1, 1), &mut ChaCha8Rng::seed_from_u64(6))
            .unwrap();
        let mut zeroed = m.clone();
        let mut flat = m.flat_params();
        let omega_len = m.params().omega.len();
        flat[omega_len..].iter_mut().for_each(|p| *p = 0.0);
        zeroed.set_flat_params(&flat).unwrap();
        let rho = random_state(7, 1);
        let out = zeroed.backward(&rho, 9).unwrap();
        assert!(out.matrix().distance(rho.matrix()).unwrap() < 1e-12);
        assert!(zeroed.denoiser_hs_distance(&rho, 9).unwrap() < 1e-12);
    }

    #[test]
    fn qgdm_matches_definition_oracle() {
        let m = BackwardModel::random_init(arch(Variant::Qgdm, 1, 1), &mut ChaCha8Rng::seed_from_u64(8))
            .unwrap();
        let rho = random_state(9, 1);
        let t = 17;
        let tau = m.embed_timestep(t).unwrap();
        let joint = crate::linalg::kron(tau.matrix(), rho.matrix());
        let u = m.denoising_template().unitary(&m.params().theta, 0.0).unwrap();
        let want = conjugate_and_reduce(&u, &joint, 2, 1, true);
        let got = m.backward(&rho, t).unwrap();
        assert!(got.matrix().distance(&want).unwrap() < 1e-12);
        got.validate().unwrap();
    }

    #[test]
    fn rqgdm_matches_definition_oracle() {
        let m = BackwardModel::random_init(arch(Variant::Rqgdm, 2, 2), &mut ChaCha8Rng::seed_from_u64(10))
            .unwrap();
        let rho = random_state(11, 2);
        let t = 4;
        let u1 = m.compression_template().unwrap().unitary(&m.params().theta, 0.0).unwrap();
        let compressed = conjugate_and_reduce(&u1, rho.matrix(), 2, 1, false);
        let tau = m.embed_timestep(t).unwrap();
        let joint = crate::linalg::kron(tau.matrix(), &compressed);
        let u2 = m.denoising_template().unitary(&m.params().theta2, 0.0).unwrap();
        let want = conjugate_and_reduce(&u2, &joint, 3, 2, true);
        let got = m.backward(&rho, t).unwrap();
        assert!(got.matrix().distance(&want).unwrap() < 1e-12);
        got.validate().unwrap();
    }

    #[test]
    fn naive_matches_definition_oracle() {
        let m = BackwardModel::random_init(arch(Variant::Naive, 2, 1), &mut ChaCha8Rng::seed_from_u64(12))
            .unwrap();
        let rho = random_state(13, 2);
        let tau = m.embed_timestep(2).unwrap();
        let joint = crate::linalg::kron(tau.matrix(), rho.matrix());
        let u = m.denoising_template().unitary(&m.params().theta, 0.0).unwrap();
        let want = conjugate_and_reduce(&u, &joint, 3, 2, false);
        let got = m.backward(&rho, 2).unwrap();
        assert!(got.matrix().distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn variant_specific_calls_check_the_variant() {
        let m = BackwardModel::with_zero_params(arch(Variant::Qgdm, 1, 1)).unwrap();
        let rho = completely_mixed(1);
        assert!(m.backward_naive(&rho, 1).is_err());
        assert!(m.backward_rqgdm(&rho, 1).is_err());
        assert!(m.backward(&completely_mixed(2), 1).is_err());
    }

    #[test]
    fn qgdm_with_small_embedding_register() {
        // n_tau < n: the kept register A overlaps the leading ρ_t qubits.
        let m = BackwardModel::random_init(arch(Variant::Qgdm, 2, 1), &mut ChaCha8Rng::seed_from_u64(14))
            .unwrap();
        let out = m.backward(&random_state(15, 2), 5).unwrap();
        assert_eq!(out.n_qubits(), 2);
        out.validate().unwrap();
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let m = BackwardModel::random_init(arch(Variant::Rqgdm, 3, 3), &mut ChaCha8Rng::seed_from_u64(16))
            .unwrap();
        let ck = Checkpoint::from_model(&m);
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        let bits = |p: &ModelParams| p.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.params), bits(&ck.params));
        let restored = back.into_model().unwrap();
        assert_eq!(restored.flat_params(), m.flat_params());

        let mut wrong = ck;
        wrong.format_version = 99;
        assert!(matches!(wrong.into_model(), Err(Error::CheckpointVersion(99))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn backward_maps_are_trace_and_psd_preserving(
                seed in any::<u64>(),
                which in 0usize..3,
                t in 1usize..=30,
            ) {
                let (variant, n, n_tau) = match which {
                    0 => (Variant::Qgdm, 2, 2),
                    1 => (Variant::Rqgdm, 2, 2),
                    _ => (Variant::Naive, 2, 1),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = BackwardModel::random_init(arch(variant, n, n_tau), &mut rng).unwrap();
                let rho = random_mixed_state(n, 2, 2, &mut rng).unwrap();
                let out = m.backward(&rho, t).unwrap();
                prop_assert_eq!(out.n_qubits(), n);
                let tr = crate::linalg::trace(out.matrix()).unwrap();
                prop_assert!((tr - ONE).norm() < 1e-10);
                prop_assert!(out.validate().is_ok());
            }
        }
    }
}
