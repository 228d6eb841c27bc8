//! Fidelity loss, finite-difference gradients, Adam, and the training loop.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{Architecture, BackwardModel, Variant};
use crate::diffusion::{cosine_schedule, forward_to, NoiseSchedule};
use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, FidelityReference};

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStream {
    Target = 0,
    Init = 1,
    Batch = 2,
}

pub fn seeded_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Diffusion steps `T`.
    pub steps: usize,
    /// Cosine-schedule offset `s`.
    pub schedule_offset: f64,
    pub batch_size: usize,
    /// Weight of the batch term relative to the `t = 1` term.
    pub lambda: f64,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub lr_decay_steps: usize,
    pub embed_layers: usize,
    pub denoise_layers: usize,
    /// Embedding register size; `None` means one embedding qubit per
    /// target qubit.
    pub n_tau: Option<usize>,
    pub fd_step: f64,
    pub seed: u64,
    /// Stop once the loss spread over this many epochs falls below
    /// `converge_tol`.
    pub converge_window: usize,
    pub converge_tol: f64,
    /// Record elapsed seconds per epoch. Off by default so output files are
    /// reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 30,
            schedule_offset: 0.008,
            batch_size: 16,
            lambda: 0.02,
            epochs: 200,
            lr_initial: 0.3,
            lr_final: 0.01,
            lr_decay_steps: 200,
            embed_layers: 5,
            denoise_layers: 1,
            n_tau: None,
            fd_step: 1e-3,
            seed: 0,
            converge_window: 10,
            converge_tol: 1e-6,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.steps < 2 {
            return bad(format!("steps must be ≥ 2, got {}", self.steps));
        }
        if self.batch_size == 0 || self.batch_size > self.steps - 1 {
            return bad(format!(
                "batch_size must lie in 1..={} (unique timesteps from 2..={}), got {}",
                self.steps - 1,
                self.steps,
                self.batch_size
            ));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and ≥ 0, got {}", self.lambda));
        }
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1".into());
        }
        if !(self.lr_final > 0.0) || !(self.lr_initial >= self.lr_final) || !self.lr_initial.is_finite()
        {
            return bad(format!(
                "learning rates must satisfy lr_initial ≥ lr_final > 0, got {} → {}",
                self.lr_initial, self.lr_final
            ));
        }
        if self.lr_decay_steps == 0 {
            return bad("lr_decay_steps must be ≥ 1".into());
        }
        if self.embed_layers == 0 || self.denoise_layers == 0 {
            return bad("layer counts must be ≥ 1".into());
        }
        if self.n_tau == Some(0) {
            return bad("n_tau must be ≥ 1".into());
        }
        if !(self.fd_step > 0.0) || !self.fd_step.is_finite() {
            return bad(format!("fd_step must be positive, got {}", self.fd_step));
        }
        if self.converge_window == 0 || !(self.converge_tol >= 0.0) {
            return bad("converge_window must be ≥ 1 and converge_tol ≥ 0".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        cosine_schedule(self.steps, self.schedule_offset)
    }

    pub fn architecture(&self, variant: Variant, n: usize) -> Architecture {
        Architecture {
            variant,
            n,
            n_tau: self.n_tau.unwrap_or(n),
            steps: self.steps,
            embed_layers: self.embed_layers,
            denoise_layers: self.denoise_layers,
        }
    }
}

/// Cosine decay from `lr_initial` to `lr_final` over `lr_decay_steps`, flat
/// afterwards.
pub fn lr_at(step: usize, cfg: &TrainConfig) -> f64 {
    let decay = cfg.lr_decay_steps.max(1) as f64;
    let progress = step.min(cfg.lr_decay_steps) as f64 / decay;
    cfg.lr_final + 0.5 * (cfg.lr_initial - cfg.lr_final) * (1.0 + (std::f64::consts::PI * progress).cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// Bias-corrected Adam update, in place.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "Adam state has {} entries, params {}, gradient {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step as i32);
        let c2 = 1.0 - Self::BETA2.powi(self.step as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPSILON);
        }
        Ok(())
    }
}

/// Per-timestep data that does not depend on the model: the noisy input
/// `ρ_t` and a fidelity reference for the target `ρ_{t−1}`.
#[derive(Debug, Clone)]
pub struct LossContext {
    inputs: Vec<DensityMatrix>,
    targets: Vec<FidelityReference>,
}

impl LossContext {
    pub fn new(rho0: &DensityMatrix, sched: &NoiseSchedule) -> Result<Self> {
        let steps = sched.steps();
        let mut inputs = Vec::with_capacity(steps);
        let mut targets = Vec::with_capacity(steps);
        let mut prev = rho0.clone();
        for t in 1..=steps {
            let cur = forward_to(rho0, t, sched)?;
            targets.push(FidelityReference::new(&prev)?);
            inputs.push(cur.clone());
            prev = cur;
        }
        Ok(Self { inputs, targets })
    }

    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    /// Noisy state `ρ_t`.
    pub fn input(&self, t: usize) -> Result<&DensityMatrix> {
        self.check_t(t)?;
        Ok(&self.inputs[t - 1])
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::TimestepOutOfRange {
                t,
                steps: self.steps(),
            });
        }
        Ok(())
    }

    /// `1 − F(ρ_{t−1}, f(ρ_t, t))`.
    pub fn loss_t(&self, model: &BackwardModel, t: usize) -> Result<f64> {
        self.check_t(t)?;
        let predicted = model.backward(&self.inputs[t - 1], t)?;
        let f = self.targets[t - 1].fidelity(&predicted)?;
        Ok((1.0 - f).max(0.0))
    }

    pub fn total_loss(&self, model: &BackwardModel, batch: &[usize], lambda: f64) -> Result<LossBreakdown> {
        check_batch(batch, self.steps())?;
        let l0 = self.loss_t(model, 1)?;
        let mut sum = 0.0;
        for &t in batch {
            sum += self.loss_t(model, t)?;
        }
        let batch_mean = sum / batch.len() as f64;
        Ok(LossBreakdown {
            total: l0 + lambda * batch_mean,
            first_step: l0,
            batch_mean,
        })
    }

    /// Central differences of the total loss, one parameter at a time, with
    /// the same batch for every evaluation.
    pub fn gradient(&self, model: &BackwardModel, batch: &[usize], lambda: f64, h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
        }
        check_batch(batch, self.steps())?;
        let base = model.flat_params();
        central_difference(&base, h, |p| {
            let mut probe = model.clone();
            probe.set_flat_params(p)?;
            Ok(self.total_loss(&probe, batch, lambda)?.total)
        })
    }
}

fn check_batch(batch: &[usize], steps: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("timestep batch is empty".into()));
    }
    let mut seen = vec![false; steps + 1];
    for &t in batch {
        if t < 2 || t > steps {
            return Err(Error::InvalidArgument(format!(
                "batch timesteps must lie in 2..={steps}, got {t}"
            )));
        }
        if std::mem::replace(&mut seen[t], true) {
            return Err(Error::InvalidArgument(format!("duplicate timestep {t} in batch")));
        }
    }
    Ok(())
}

/// `(f(p + h·e_i) − f(p − h·e_i)) / 2h` for every coordinate, evaluated in
/// parallel.
pub fn central_difference<F>(params: &[f64], h: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut p = params.to_vec();
            p[i] = params[i] + h;
            let plus = f(&p)?;
            p[i] = params[i] - h;
            let minus = f(&p)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    /// The `t = 1` term.
    pub first_step: f64,
    pub batch_mean: f64,
}

/// `1 − F(ρ_{t−1}, f(ρ_t, t))` for a single timestep.
pub fn loss_t(model: &BackwardModel, rho0: &DensityMatrix, t: usize, sched: &NoiseSchedule) -> Result<f64> {
    if t == 0 || t > sched.steps() {
        return Err(Error::TimestepOutOfRange { t, steps: sched.steps() });
    }
    let target = FidelityReference::new(&forward_to(rho0, t - 1, sched)?)?;
    let predicted = model.backward(&forward_to(rho0, t, sched)?, t)?;
    Ok((1.0 - target.fidelity(&predicted)?).max(0.0))
}

/// `𝓛₀ + λ·mean_{t ∈ batch} 𝓛_{t−1}`.
pub fn total_loss(
    model: &BackwardModel,
    rho0: &DensityMatrix,
    batch: &[usize],
    sched: &NoiseSchedule,
    lambda: f64,
) -> Result<f64> {
    Ok(LossContext::new(rho0, sched)?.total_loss(model, batch, lambda)?.total)
}

pub fn gradient(
    model: &BackwardModel,
    rho0: &DensityMatrix,
    batch: &[usize],
    sched: &NoiseSchedule,
    lambda: f64,
    h: f64,
) -> Result<Vec<f64>> {
    LossContext::new(rho0, sched)?.gradient(model, batch, lambda, h)
}

/// `size` distinct timesteps drawn uniformly from `2..=steps`.
pub fn sample_batch<R: Rng + ?Sized>(rng: &mut R, steps: usize, size: usize) -> Vec<usize> {
    sample(rng, steps - 1, size).into_iter().map(|i| i + 2).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub loss: f64,
    pub loss_l0: f64,
    pub loss_batch_mean: f64,
    pub learning_rate: f64,
    pub wall_time: f64,
}

pub fn records_to_csv(records: &[TrainRecord]) -> String {
    let mut out = String::from("epoch,loss,loss_L0,loss_batch_mean,lr,wall_time\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            r.epoch, r.loss, r.loss_l0, r.loss_batch_mean, r.learning_rate, r.wall_time
        );
    }
    out
}

pub fn write_records_csv(records: &[TrainRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BackwardModel,
    pub records: Vec<TrainRecord>,
    /// Epoch at which the convergence window triggered, if it did.
    pub converged_at: Option<usize>,
}

pub fn train(cfg: &TrainConfig, variant: Variant, rho0: &DensityMatrix) -> Result<TrainOutcome> {
    train_with(cfg, variant, rho0, |_, _| Ok(()))
}

/// Like [`train`], calling `on_epoch(epoch, model)` after each parameter
/// update.
pub fn train_with<F>(cfg: &TrainConfig, variant: Variant, rho0: &DensityMatrix, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &BackwardModel) -> Result<()>,
{
    cfg.validate()?;
    let arch = cfg.architecture(variant, rho0.n_qubits());
    let sched = cfg.schedule()?;
    let ctx = LossContext::new(rho0, &sched)?;
    let mut model = BackwardModel::random_init(arch, &mut seeded_rng(cfg.seed, RngStream::Init))?;
    let mut batch_rng = seeded_rng(cfg.seed, RngStream::Batch);
    let mut adam = AdamState::new(model.n_params());
    let mut params = model.flat_params();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut converged_at = None;
    let clock = Instant::now();

    for epoch in 0..cfg.epochs {
        let batch = sample_batch(&mut batch_rng, cfg.steps, cfg.batch_size);
        let loss = ctx.total_loss(&model, &batch, cfg.lambda)?;
        let grad = ctx.gradient(&model, &batch, cfg.lambda, cfg.fd_step)?;
        let lr = lr_at(epoch, cfg);
        adam.update(&mut params, &grad, lr)?;
        model.set_flat_params(&params)?;
        records.push(TrainRecord {
            epoch,
            loss: loss.total,
            loss_l0: loss.first_step,
            loss_batch_mean: loss.batch_mean,
            learning_rate: lr,
            wall_time: if cfg.record_wall_time {
                clock.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        on_epoch(epoch, &model)?;

        if records.len() >= cfg.converge_window {
            let window = &records[records.len() - cfg.converge_window..];
            let (lo, hi) = window
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.loss), hi.max(r.loss)));
            if hi - lo < cfg.converge_tol {
                converged_at = Some(epoch);
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model,
        records,
        converged_at,
    })
}
