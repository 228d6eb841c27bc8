//! Forward process: the cosine noise schedule and depolarizing steps.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{self, DensityMatrix};

/// Per-step retention `α_t` and cumulative retention `ᾱ_t` for
/// `t = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    steps: usize,
    offset: f64,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn check_t(&self, t: usize, allow_zero: bool) -> Result<()> {
        if t > self.steps || (t == 0 && !allow_zero) {
            return Err(Error::TimestepOutOfRange {
                t,
                steps: self.steps,
            });
        }
        Ok(())
    }

    /// `α_t`, for `1 ≤ t ≤ T`.
    pub fn alpha(&self, t: usize) -> Result<f64> {
        self.check_t(t, false)?;
        Ok(self.alpha[t - 1])
    }

    /// `ᾱ_t`, for `0 ≤ t ≤ T` (`ᾱ_0 = 1`).
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.check_t(t, true)?;
        Ok(if t == 0 { 1.0 } else { self.alpha_bar[t - 1] })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// `t,alpha,alpha_bar` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,alpha,alpha_bar\n");
        for t in 1..=self.steps {
            let _ = writeln!(out, "{t},{:e},{:e}", self.alpha[t - 1], self.alpha_bar[t - 1]);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Cosine schedule: `ᾱ_t = g(t)/g(0)` with
/// `g(t) = cos²(((t/T + s)/(1 + s))·π/2)`, and `α_t = ᾱ_t/ᾱ_{t−1}`.
pub fn cosine_schedule(steps: usize, offset: f64) -> Result<NoiseSchedule> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "noise schedule needs at least 2 steps, got {steps}"
        )));
    }
    if !(offset > 0.0) || !offset.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "schedule offset must be positive, got {offset}"
        )));
    }
    let g = |t: usize| {
        let x = ((t as f64 / steps as f64 + offset) / (1.0 + offset)) * std::f64::consts::FRAC_PI_2;
        let c = x.cos();
        c * c
    };
    let g0 = g(0);
    let alpha_bar: Vec<f64> = (1..=steps).map(|t| (g(t) / g0).clamp(0.0, 1.0)).collect();
    if alpha_bar[steps - 2] <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ᾱ_(T−1) vanished for T = {steps}, s = {offset}"
        )));
    }
    let alpha = (0..steps)
        .map(|i| {
            let prev = if i == 0 { 1.0 } else { alpha_bar[i - 1] };
            (alpha_bar[i] / prev).clamp(0.0, 1.0)
        })
        .collect();
    Ok(NoiseSchedule {
        steps,
        offset,
        alpha,
        alpha_bar,
    })
}

/// One depolarizing step `ρ_{t−1} ↦ ρ_t`.
pub fn forward_step(rho_prev: &DensityMatrix, t: usize, sched: &NoiseSchedule) -> Result<DensityMatrix> {
    qstate::depolarize(rho_prev, sched.alpha(t)?)
}

/// Closed-form jump `ρ_0 ↦ ρ_t = (1 − ᾱ_t)·I/d + ᾱ_t·ρ_0`. `t = 0` returns
/// `ρ_0`.
pub fn forward_to(rho0: &DensityMatrix, t: usize, sched: &NoiseSchedule) -> Result<DensityMatrix> {
    qstate::depolarize(rho0, sched.alpha_bar(t)?)
}
