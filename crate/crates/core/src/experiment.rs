//! Seeded experiment runs: configuration, artifact layout, and summaries.
//!
//! Every run owns `out_dir/seed_<seed>/`. Files are written from
//! deterministic data only, so the same configuration reproduces them byte
//! for byte (wall-clock timing is opt-in via `record_wall_time`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::{random_mixed_state, random_pure_state, DEFAULT_PREP_LAYERS};
use crate::denoise::{BackwardModel, Checkpoint, Variant};
use crate::diffusion::{forward_to, NoiseSchedule};
use crate::error::{Error, Result};
use crate::generate::{diffusion_reference_curve, generate, DensityMatrixRecord, GenerationTrace};
use crate::qstate::{self, bloch_coordinates, completely_mixed, from_pure, BlochVector, DensityMatrix};
use crate::train::{records_to_csv, seeded_rng, train_with, RngStream, TrainConfig, TrainRecord};

pub const MANIFEST_VERSION: u32 = 1;
/// QGDM needs `n + n_tau` simulated qubits; larger targets require
/// `allow_large`.
pub const QGDM_MAX_QUBITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Pure,
    Mixed,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pure" => Ok(TargetKind::Pure),
            "mixed" => Ok(TargetKind::Mixed),
            other => Err(Error::InvalidArgument(format!(
                "unknown target kind `{other}` (expected pure or mixed)"
            ))),
        }
    }
}

/// Per-size hyperparameter defaults. Unlisted sizes fall back to the
/// nearest listed one.
pub fn default_train_config(variant: Variant, n: usize, target: TargetKind) -> TrainConfig {
    let mixed = target == TargetKind::Mixed;
    let mut cfg = TrainConfig::default();
    match variant {
        Variant::Qgdm | Variant::Naive => {
            cfg.denoise_layers = match (n, mixed) {
                (0..=2, _) => 1,
                (3, false) => 1,
                (3, true) => 2,
                (_, false) => 2,
                (_, true) => 3,
            };
        }
        Variant::Rqgdm => {
            cfg.denoise_layers = match n {
                0..=2 => 1,
                3 | 4 => 1 + mixed as usize,
                5 | 6 => 1 + 2 * mixed as usize,
                _ => 1 + 3 * mixed as usize,
            };
            if n >= 6 {
                cfg.lr_initial = 0.5;
                cfg.lr_final = 0.07;
                if mixed {
                    cfg.epochs = 500;
                    cfg.lr_decay_steps = 500;
                }
            }
            if n >= 8 && mixed {
                cfg.steps = 90;
            }
        }
    }
    cfg
}

/// Flat experiment description. Unset training fields take the per-size
/// defaults for the chosen variant, size and target kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub n: usize,
    pub n_tau: Option<usize>,
    pub target: TargetKind,
    /// Pure components mixed into a mixed target.
    pub mixture_components: usize,
    pub prep_layers: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub allow_large: bool,
    /// Embedding sizes visited by the sweep command.
    pub ntau_values: Vec<usize>,

    pub steps: Option<usize>,
    pub schedule_offset: Option<f64>,
    pub batch_size: Option<usize>,
    pub lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub lr_initial: Option<f64>,
    pub lr_final: Option<f64>,
    pub lr_decay_steps: Option<usize>,
    pub embed_layers: Option<usize>,
    pub denoise_layers: Option<usize>,
    pub fd_step: Option<f64>,
    pub converge_window: Option<usize>,
    pub converge_tol: Option<f64>,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Qgdm,
            n: 1,
            n_tau: None,
            target: TargetKind::Pure,
            mixture_components: 2,
            prep_layers: DEFAULT_PREP_LAYERS,
            seeds: (0..10).collect(),
            out_dir: PathBuf::from("runs"),
            allow_large: false,
            ntau_values: vec![1, 2, 3],
            steps: None,
            schedule_offset: None,
            batch_size: None,
            lambda: None,
            epochs: None,
            lr_initial: None,
            lr_final: None,
            lr_decay_steps: None,
            embed_layers: None,
            denoise_layers: None,
            fd_step: None,
            converge_window: None,
            converge_tol: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Training settings for one seed with every default filled in.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let base = default_train_config(self.variant, self.n, self.target);
        TrainConfig {
            steps: self.steps.unwrap_or(base.steps),
            schedule_offset: self.schedule_offset.unwrap_or(base.schedule_offset),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            lambda: self.lambda.unwrap_or(base.lambda),
            epochs: self.epochs.unwrap_or(base.epochs),
            lr_initial: self.lr_initial.unwrap_or(base.lr_initial),
            lr_final: self.lr_final.unwrap_or(base.lr_final),
            lr_decay_steps: self.lr_decay_steps.unwrap_or(base.lr_decay_steps),
            embed_layers: self.embed_layers.unwrap_or(base.embed_layers),
            denoise_layers: self.denoise_layers.unwrap_or(base.denoise_layers),
            n_tau: self.n_tau,
            fd_step: self.fd_step.unwrap_or(base.fd_step),
            seed,
            converge_window: self.converge_window.unwrap_or(base.converge_window),
            converge_tol: self.converge_tol.unwrap_or(base.converge_tol),
            record_wall_time: self.record_wall_time,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return bad("n must be ≥ 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must list at least one seed".into());
        }
        let mut unique = self.seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        match self.variant {
            Variant::Qgdm if self.n > QGDM_MAX_QUBITS && !self.allow_large => {
                return bad(format!(
                    "qgdm is limited to n ≤ {QGDM_MAX_QUBITS} (set allow_large = true to override), got n = {}",
                    self.n
                ))
            }
            Variant::Rqgdm if self.n < 2 => {
                return bad(format!("rqgdm requires n ≥ 2, got n = {}", self.n));
            }
            Variant::Rqgdm if self.n_tau.is_some_and(|k| k != self.n) => {
                return bad(format!("rqgdm requires n_tau = n = {}", self.n));
            }
            _ => {}
        }
        if self.target == TargetKind::Mixed && self.mixture_components < 2 {
            return bad("mixed targets need mixture_components ≥ 2".into());
        }
        if self.prep_layers == 0 {
            return bad("prep_layers must be ≥ 1".into());
        }
        if self.ntau_values.contains(&0) {
            return bad("ntau_values must be ≥ 1".into());
        }
        let cfg = self.train_config(self.seeds[0]);
        cfg.validate()?;
        cfg.architecture(self.variant, self.n).validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Target state for `seed`, drawn from its own random stream.
    pub fn target_state(&self, seed: u64) -> Result<DensityMatrix> {
        let mut rng = seeded_rng(seed, RngStream::Target);
        match self.target {
            TargetKind::Pure => Ok(from_pure(&random_pure_state(self.n, self.prep_layers, &mut rng)?)),
            TargetKind::Mixed => random_mixed_state(self.n, self.mixture_components, self.prep_layers, &mut rng),
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output location.
    pub fn hash(&self) -> String {
        let identity = ExperimentConfig {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        sha256_hex(serde_json::to_string(&identity).expect("config serialises").as_bytes())
    }
}

/// CLI flag values that replace config entries when present.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub variant: Option<Variant>,
    pub n: Option<usize>,
    pub n_tau: Option<usize>,
    pub target: Option<TargetKind>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(k) = self.n_tau {
            cfg.n_tau = Some(k);
        }
        if let Some(t) = self.target {
            cfg.target = t;
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-seed provenance record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub crate_version: String,
    pub config_sha256: String,
    pub seed: u64,
    /// File name to SHA-256 of its contents.
    pub artifacts: BTreeMap<String, String>,
}

/// Writes named files into `dir` and records their hashes.
struct ArtifactWriter {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    fn create(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            hashes: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.hashes.insert(name.to_owned(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value).expect("artifact serialises") + "\n"))
    }

    fn finish(self, cfg: &ExperimentConfig, seed: u64) -> Result<()> {
        let manifest = Manifest {
            manifest_version: MANIFEST_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_owned(),
            config_sha256: cfg.hash(),
            seed,
            artifacts: self.hashes,
        };
        let path = self.dir.join("MANIFEST.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Outcome of one seed, also written as `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub variant: Variant,
    pub n: usize,
    pub n_tau: usize,
    pub target: TargetKind,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub final_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub label: String,
    pub runs: usize,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("cannot summarise an empty set of runs".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        let mean = sorted.iter().sum::<f64>() / k as f64;
        let std = if k > 1 {
            (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            label: label.into(),
            runs: k,
            median,
            mean,
            std,
            min: sorted[0],
            max: sorted[k - 1],
        })
    }
}

/// `(a − b) / b`.
pub fn relative_change(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 || !b.is_finite() || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("relative change undefined for a = {a}, b = {b}")));
    }
    Ok((a - b) / b)
}

/// Relative change between the means of two groups.
pub fn relative_change_of_means(group: &[f64], baseline: &[f64]) -> Result<f64> {
    if group.is_empty() || baseline.is_empty() {
        return Err(Error::InvalidArgument("relative change needs two non-empty groups".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    relative_change(mean(group), mean(baseline))
}

/// Artifacts of a finished seed kept in memory for callers.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub result: RunResult,
    pub model: BackwardModel,
    pub records: Vec<TrainRecord>,
    pub trace: GenerationTrace,
    pub target: DensityMatrix,
}

fn reference_curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("t,fidelity\n");
    for (i, f) in curve.iter().enumerate() {
        let _ = writeln!(out, "{},{f:e}", i + 1);
    }
    out
}

/// Trains and evaluates one seed, writing its artifacts under
/// `out_dir/seed_<seed>/`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let (run, writer) = train_seed(cfg, seed, |_, _| Ok(()))?;
    writer.finish(cfg, seed)?;
    Ok(run)
}

/// Leaves the manifest unwritten so callers can add files first.
fn train_seed<F>(cfg: &ExperimentConfig, seed: u64, on_epoch: F) -> Result<(SeedRun, ArtifactWriter)>
where
    F: FnMut(usize, &BackwardModel) -> Result<()>,
{
    let tcfg = cfg.train_config(seed);
    let target = cfg.target_state(seed)?;
    let outcome = train_with(&tcfg, cfg.variant, &target, on_epoch)?;
    let trace = generate(&outcome.model, Some(&target))?;
    let curve = diffusion_reference_curve(&target, &tcfg.schedule()?)?;
    let result = RunResult {
        seed,
        variant: cfg.variant,
        n: cfg.n,
        n_tau: outcome.model.architecture().n_tau,
        target: cfg.target,
        epochs_run: outcome.records.len(),
        final_loss: outcome.records.last().map_or(f64::NAN, |r| r.loss),
        final_fidelity: trace.final_fidelity().expect("reference supplied"),
    };

    let mut w = ArtifactWriter::create(cfg.out_dir.join(format!("seed_{seed}")))?;
    w.write("checkpoint.json", &(Checkpoint::from_model(&outcome.model).to_json() + "\n"))?;
    w.write("train.csv", &records_to_csv(&outcome.records))?;
    w.write("generation.csv", &trace.to_csv())?;
    w.write("reference_curve.csv", &reference_curve_csv(&curve))?;
    w.write_json("target_state.json", &DensityMatrixRecord::from(&target))?;
    w.write_json("final_state.json", &DensityMatrixRecord::from(&trace.final_state))?;
    w.write_json("result.json", &result)?;
    log::info!(
        "{} n={} seed {seed}: fidelity {:.6} after {} epochs",
        cfg.variant,
        cfg.n,
        result.final_fidelity,
        result.epochs_run
    );
    let run = SeedRun {
        result,
        model: outcome.model,
        records: outcome.records,
        trace,
        target,
    };
    Ok((run, w))
}

/// Runs every seed in parallel. Completed seeds keep their artifacts even
/// if another seed fails; the first failure is returned.
fn run_all<T: Send>(seeds: &[u64], job: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = seeds.par_iter().map(|&s| job(s)).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut first_err = None;
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::error!("seed {seed} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serialises") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml_string()).map_err(|e| Error::io(&path, e))
}

fn run_label(cfg: &ExperimentConfig) -> String {
    let n_tau = match cfg.variant {
        Variant::Rqgdm => cfg.n,
        _ => cfg.n_tau.unwrap_or(cfg.n),
    };
    format!("{}-n{}-ntau{}-{}", cfg.variant, cfg.n, n_tau, match cfg.target {
        TargetKind::Pure => "pure",
        TargetKind::Mixed => "mixed",
    })
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub runs: Vec<RunResult>,
    pub summary: SummaryStats,
}

/// Trains every seed and writes `summary.json`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    cfg.validate()?;
    prepare_out_dir(cfg)?;
    let runs = run_all(&cfg.seeds, |seed| run_seed(cfg, seed).map(|r| r.result))?;
    let fids: Vec<f64> = runs.iter().map(|r| r.final_fidelity).collect();
    let summary = SummaryStats::from_values(run_label(cfg), &fids)?;
    write_json_file(&cfg.out_dir.join("summary.json"), &summary)?;
    Ok(TrainReport { runs, summary })
}

/// Trains one QGDM configuration per embedding size and writes
/// `sweep.csv` alongside each size's run directory.
pub fn cmd_sweep_ntau(cfg: &ExperimentConfig, ntau_values: &[usize]) -> Result<Vec<(usize, SummaryStats)>> {
    if cfg.variant != Variant::Qgdm {
        return Err(Error::Config(format!("sweep-ntau requires variant qgdm, got {}", cfg.variant)));
    }
    if ntau_values.is_empty() {
        return Err(Error::Config("sweep-ntau needs at least one n_tau value".into()));
    }
    let per_size: Vec<ExperimentConfig> = ntau_values
        .iter()
        .map(|&k| ExperimentConfig {
            n_tau: Some(k),
            out_dir: cfg.out_dir.join(format!("ntau_{k}")),
            ..cfg.clone()
        })
        .collect();
    for c in &per_size {
        c.validate()?;
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut table = Vec::with_capacity(per_size.len());
    let mut csv = String::from("n_tau,runs,median,mean,std,min,max\n");
    for (c, &k) in per_size.iter().zip(ntau_values) {
        let s = cmd_train(c)?.summary;
        let _ = writeln!(csv, "{k},{},{:e},{:e},{:e},{:e},{:e}", s.runs, s.median, s.mean, s.std, s.min, s.max);
        table.push((k, s));
    }
    let path = cfg.out_dir.join("sweep.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

/// Per-epoch distances between the denoising circuit's input and output,
/// averaged over all timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitDistance {
    pub epoch: usize,
    /// Full register: `τ_t ⊗ ρ_t` against its image under the circuit.
    pub joint: f64,
    /// Kept register only: `ρ_t` against the model output.
    pub output: f64,
}

/// Mean circuit input/output distances over `t = 1..=T` for noisy inputs
/// `forward_to(target, t)`.
pub fn circuit_distance(
    model: &BackwardModel,
    target: &DensityMatrix,
    sched: &NoiseSchedule,
    epoch: usize,
) -> Result<CircuitDistance> {
    let steps = model.steps();
    let (mut joint, mut output) = (0.0, 0.0);
    for t in 1..=steps {
        let rho_t = forward_to(target, t, sched)?;
        joint += model.denoiser_hs_distance(&rho_t, t)?;
        output += qstate::hs_distance(&rho_t, &model.backward(&rho_t, t)?)?;
    }
    Ok(CircuitDistance {
        epoch,
        joint: joint / steps as f64,
        output: output / steps as f64,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureStudyReport {
    pub seed: u64,
    pub loss_first_window_mean: f64,
    pub loss_last_window_mean: f64,
    pub final_joint_distance: f64,
    pub final_output_distance: f64,
    /// `F(I/d, ρ₀)`.
    pub mixed_state_fidelity: f64,
    /// Largest `|F(ρ̃_t, ρ₀) − F(I/d, ρ₀)|` over the generation trace.
    pub max_fidelity_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DensityComparison {
    generated: DensityMatrixRecord,
    target: DensityMatrixRecord,
}

const LOSS_WINDOW: usize = 20;

fn window_means(records: &[TrainRecord]) -> (f64, f64) {
    let w = LOSS_WINDOW.min(records.len()).max(1);
    let mean = |rs: &[TrainRecord]| rs.iter().map(|r| r.loss).sum::<f64>() / rs.len() as f64;
    (mean(&records[..w]), mean(&records[records.len() - w..]))
}

/// Trains the naive variant, tracking circuit distances per epoch.
pub fn cmd_failure_study(cfg: &ExperimentConfig) -> Result<Vec<FailureStudyReport>> {
    let cfg = ExperimentConfig {
        variant: Variant::Naive,
        ..cfg.clone()
    };
    cfg.validate()?;
    prepare_out_dir(&cfg)?;
    let reports = run_all(&cfg.seeds, |seed| failure_study_seed(&cfg, seed))?;
    write_json_file(&cfg.out_dir.join("failure_study.json"), &reports)?;
    Ok(reports)
}

fn failure_study_seed(cfg: &ExperimentConfig, seed: u64) -> Result<FailureStudyReport> {
    let target = cfg.target_state(seed)?;
    let sched = cfg.train_config(seed).schedule()?;
    let mut distances = Vec::new();
    let (run, mut w) = train_seed(cfg, seed, |epoch, model| {
        distances.push(circuit_distance(model, &target, &sched, epoch)?);
        Ok(())
    })?;
    let mut hs_csv = String::from("epoch,hs_joint,hs_output\n");
    for d in &distances {
        let _ = writeln!(hs_csv, "{},{:e},{:e}", d.epoch, d.joint, d.output);
    }
    w.write("hs.csv", &hs_csv)?;
    w.write_json(
        "density_comparison.json",
        &DensityComparison {
            generated: DensityMatrixRecord::from(&run.trace.final_state),
            target: DensityMatrixRecord::from(&target),
        },
    )?;
    w.finish(cfg, seed)?;

    let baseline = qstate::fidelity(&completely_mixed(cfg.n), &target)?;
    let max_dev = run
        .trace
        .fidelities()
        .iter()
        .map(|f| (f - baseline).abs())
        .fold(0.0, f64::max);
    let (first, last) = window_means(&run.records);
    let fin = distances.last().copied().expect("at least one epoch");
    Ok(FailureStudyReport {
        seed,
        loss_first_window_mean: first,
        loss_last_window_mean: last,
        final_joint_distance: fin.joint,
        final_output_distance: fin.output,
        mixed_state_fidelity: baseline,
        max_fidelity_deviation: max_dev,
    })
}

/// Embedding-state Bloch vectors for `t = 1..=T` of a single-qubit
/// embedding register.
pub fn bloch_trajectory(model: &BackwardModel) -> Result<Vec<BlochVector>> {
    if model.architecture().n_tau != 1 {
        return Err(Error::InvalidArgument(format!(
            "Bloch export needs a single embedding qubit, model has n_tau = {}",
            model.architecture().n_tau
        )));
    }
    (1..=model.steps())
        .map(|t| bloch_coordinates(&model.embed_timestep(t)?))
        .collect()
}

pub fn bloch_csv(points: &[BlochVector]) -> String {
    let mut out = String::from("t,x,y,z\n");
    for (i, b) in points.iter().enumerate() {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", i + 1, b.x, b.y, b.z);
    }
    out
}

/// Reads a checkpoint and writes its embedding trajectory as CSV.
pub fn cmd_export_bloch(checkpoint: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<Vec<BlochVector>> {
    let model = Checkpoint::load(checkpoint)?.into_model()?;
    let points = bloch_trajectory(&model)?;
    let out = out.as_ref();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(out, bloch_csv(&points)).map_err(|e| Error::io(out, e))?;
    Ok(points)
}

/// Final fidelities found at `path`: a run directory (its `seed_*/result.json`
/// files) or a text file of numbers separated by commas or whitespace.
pub fn load_fidelities(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut seeds: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("result.json").is_file())
            .collect();
        seeds.sort();
        seeds
            .iter()
            .map(|dir| {
                let file = dir.join("result.json");
                let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
                let r: RunResult = serde_json::from_str(&text).map_err(|e| Error::parse(&file, e))?;
                Ok(r.final_fidelity)
            })
            .collect()
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.lines()
            .map(|line| line.split('#').next().unwrap_or(""))
            .flat_map(|line| line.split(|c: char| c == ',' || c.is_whitespace()))
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::parse(path, format!("`{s}`: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryReport {
    pub groups: Vec<SummaryStats>,
    /// `(mean(groups) − mean(baseline)) / mean(baseline)` over all values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_change: Option<f64>,
}

/// Summary statistics per input path, plus the relative change of all
/// inputs against `baseline` when given.
pub fn cmd_summarize(paths: &[PathBuf], baseline: &[PathBuf]) -> Result<SummaryReport> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("summarize needs at least one input".into()));
    }
    let mut groups = Vec::with_capacity(paths.len());
    let mut all = Vec::new();
    for p in paths {
        let values = load_fidelities(p)?;
        groups.push(SummaryStats::from_values(p.display().to_string(), &values)?);
        all.extend(values);
    }
    let relative_change = if baseline.is_empty() {
        None
    } else {
        let mut base = Vec::new();
        for p in baseline {
            base.extend(load_fidelities(p)?);
        }
        Some(relative_change_of_means(&all, &base)?)
    };
    Ok(SummaryReport { groups, relative_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_size_defaults() {
        let d = default_train_config(Variant::Qgdm, 1, TargetKind::Pure);
        assert_eq!(
            (d.steps, d.schedule_offset, d.batch_size, d.lambda, d.epochs),
            (30, 0.008, 16, 0.02, 200)
        );
        assert_eq!((d.lr_initial, d.lr_final, d.lr_decay_steps, d.embed_layers), (0.3, 0.01, 200, 5));
        let layers = |v, n, t| default_train_config(v, n, t).denoise_layers;
        use TargetKind::{Mixed, Pure};
        assert_eq!(layers(Variant::Qgdm, 2, Mixed), 1);
        assert_eq!((layers(Variant::Qgdm, 3, Pure), layers(Variant::Qgdm, 3, Mixed)), (1, 2));
        assert_eq!((layers(Variant::Qgdm, 4, Pure), layers(Variant::Qgdm, 4, Mixed)), (2, 3));
        assert_eq!(layers(Variant::Rqgdm, 2, Mixed), 1);
        assert_eq!(layers(Variant::Rqgdm, 4, Mixed), 2);
        assert_eq!(layers(Variant::Rqgdm, 5, Mixed), 3);
        assert_eq!(layers(Variant::Rqgdm, 8, Mixed), 4);
        assert_eq!(layers(Variant::Rqgdm, 8, Pure), 1);

        let r5 = default_train_config(Variant::Rqgdm, 5, Mixed);
        assert_eq!((r5.epochs, r5.lr_initial, r5.steps), (200, 0.3, 30));
        let r6 = default_train_config(Variant::Rqgdm, 6, Pure);
        assert_eq!((r6.epochs, r6.lr_initial, r6.lr_final), (200, 0.5, 0.07));
        let r7 = default_train_config(Variant::Rqgdm, 7, Mixed);
        assert_eq!((r7.epochs, r7.lr_decay_steps, r7.steps), (500, 500, 30));
        assert_eq!(default_train_config(Variant::Rqgdm, 8, Mixed).steps, 90);
        assert_eq!(default_train_config(Variant::Rqgdm, 8, Pure).steps, 30);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            variant = "rqgdm"
            n = 3
            target = "mixed"
            seeds = [4, 5]
            epochs = 50
            "#,
        )
        .unwrap();
        assert_eq!(cfg.variant, Variant::Rqgdm);
        let t = cfg.train_config(5);
        assert_eq!((t.epochs, t.denoise_layers, t.seed, t.lr_decay_steps), (50, 2, 5, 200));
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());

        let mut c = cfg.clone();
        ConfigOverrides {
            n: Some(2),
            seeds: Some(vec![9]),
            target: Some(TargetKind::Pure),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!((c.n, c.seeds.as_slice(), c.target), (2, &[9u64][..], TargetKind::Pure));
        assert_ne!(c.hash(), cfg.hash());

        assert!(ExperimentConfig::from_toml_str("bogus_key = 1").is_err());
    }

    #[test]
    fn validation_rejects_before_training() {
        let base = ExperimentConfig::default();
        base.validate().unwrap();
        let cases = [
            ExperimentConfig { batch_size: Some(30), ..base.clone() },
            ExperimentConfig { variant: Variant::Rqgdm, n: 1, ..base.clone() },
            ExperimentConfig { variant: Variant::Rqgdm, n: 3, n_tau: Some(2), ..base.clone() },
            ExperimentConfig { n: 5, ..base.clone() },
            ExperimentConfig { seeds: vec![], ..base.clone() },
            ExperimentConfig { seeds: vec![1, 1], ..base.clone() },
            ExperimentConfig { lambda: Some(-1.0), ..base.clone() },
            ExperimentConfig { target: TargetKind::Mixed, mixture_components: 1, ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
        ExperimentConfig { n: 5, allow_large: true, ..base }.validate().unwrap();
    }

    #[test]
    fn targets_follow_their_seed() {
        let cfg = ExperimentConfig { n: 2, ..Default::default() };
        let a = cfg.target_state(3).unwrap();
        assert_eq!(a, cfg.target_state(3).unwrap());
        assert_ne!(a, cfg.target_state(4).unwrap());
        assert!((a.purity() - 1.0).abs() < 1e-10);
        let mixed = ExperimentConfig { target: TargetKind::Mixed, ..cfg };
        assert!(mixed.target_state(3).unwrap().purity() < 1.0 - 1e-6);
    }

    #[test]
    fn summary_statistics() {
        let one = SummaryStats::from_values("x", &[0.7]).unwrap();
        assert_eq!((one.median, one.mean, one.std), (0.7, 0.7, 0.0));
        let s = SummaryStats::from_values("y", &[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.median, s.mean, s.min, s.max), (2.5, 2.5, 1.0, 4.0));
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(SummaryStats::from_values("z", &[]).is_err());
    }

    #[test]
    fn relative_change_arithmetic() {
        assert_eq!(relative_change(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(relative_change_of_means(&[0.2, 0.4], &[0.4, 0.2]).unwrap(), 0.0);
        assert!((relative_change(0.75, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(relative_change(1.0, 0.0).is_err());
        assert!(relative_change_of_means(&[], &[1.0]).is_err());
    }

    #[test]
    fn fidelity_files_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("values.txt");
        std::fs::write(&p, "# best\n0.9, 0.8\n0.7\n").unwrap();
        assert_eq!(load_fidelities(&p).unwrap(), vec![0.9, 0.8, 0.7]);
        std::fs::write(&p, "0.9 abc").unwrap();
        assert!(matches!(load_fidelities(&p), Err(Error::Parse { .. })));
        assert!(cmd_summarize(&[], &[]).is_err());
    }

    #[test]
    fn bloch_export_needs_one_embedding_qubit() {
        let cfg = TrainConfig::default();
        let two = BackwardModel::with_zero_params(cfg.architecture(Variant::Qgdm, 2)).unwrap();
        assert!(bloch_trajectory(&two).is_err());
        let one = BackwardModel::random_init(
            cfg.architecture(Variant::Qgdm, 1),
            &mut seeded_rng(1, RngStream::Init),
        )
        .unwrap();
        let pts = bloch_trajectory(&one).unwrap();
        assert_eq!(pts.len(), 30);
        assert!(pts.iter().all(|b| (b.norm() - 1.0).abs() < 1e-8));
        let csv = bloch_csv(&pts);
        assert!(csv.starts_with("t,x,y,z\n1,"));
        assert_eq!(csv.lines().count(), 31);
    }
}
