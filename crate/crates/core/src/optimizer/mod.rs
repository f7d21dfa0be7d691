//! Trajectory optimization (adjoint gradients + L-BFGS) and Bayesian
//! calibration of the drive frequency and gate time.

pub mod bayes;
pub mod grape;
pub mod lbfgs;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fidelity::GateTarget;
use crate::landscape::Device;
use crate::params::SimParams;
use crate::pulse::{ControlVector, Interpolation, DEFAULT_CONTROL_BOUND, DEFAULT_KNOT_RATE};

pub use bayes::{bayes_minimize, bayesian_calibrate, AmplitudeRule, CalibrationConfig, CalibrationResult};
pub use grape::{finite_difference_gradient, infidelity_and_gradient, Objective};
pub use lbfgs::{LbfgsSettings, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    #[default]
    Adjoint,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub max_iterations: usize,
    pub knot_rate: f64,
    pub gradient_mode: GradientMode,
    /// Stop when an iteration changes the infidelity by less than this.
    pub convergence_tol: f64,
    /// Symmetric bound on every knot (nm).
    pub control_bounds: f64,
    pub boundary_pinning: bool,
    /// Stop early once the infidelity reaches this value.
    pub target_infidelity: Option<f64>,
    pub interpolation: Interpolation,
    /// Step for the finite-difference mode (nm).
    pub fd_step: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            knot_rate: DEFAULT_KNOT_RATE,
            gradient_mode: GradientMode::Adjoint,
            convergence_tol: 1e-10,
            control_bounds: DEFAULT_CONTROL_BOUND,
            boundary_pinning: true,
            target_infidelity: None,
            interpolation: Interpolation::Linear,
            fd_step: 1e-6,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.knot_rate >= 1.0) {
            return Err(invalid("knot_rate must be at least 1 per ns"));
        }
        if !(self.control_bounds > 0.0) || !(self.convergence_tol >= 0.0) || !(self.fd_step > 0.0) {
            return Err(invalid("bounds, tolerance and finite-difference step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub infidelity: f64,
    pub grad_norm: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub history: Vec<IterationRecord>,
    pub final_controls: ControlVector,
    pub best_infidelity: f64,
    pub initial_infidelity: f64,
    pub termination: Termination,
    /// Set when the line search could not make progress; the best point so far is returned.
    pub line_search_failed: bool,
    pub evaluations: usize,
}

impl OptimizationTrace {
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.history {
            serde_json::to_writer(&mut w, r).map_err(|e| Error::Numerical(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Runs L-BFGS on the knots, reparametrized as `knot = B tanh(u)` so that
/// every iterate respects the bound `B`. Pinned boundary knots stay at zero.
pub fn optimize_trajectory(
    initial: &ControlVector,
    cfg: &OptimizationConfig,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    let bound = cfg.control_bounds;
    let mut start = initial.clone();
    start.bound = bound;
    let n = start.knots.len();
    if cfg.boundary_pinning {
        start.knots[0] = 0.0;
        start.knots[n - 1] = 0.0;
    }
    start.validate()?;
    let free: Vec<usize> = if cfg.boundary_pinning { (1..n - 1).collect() } else { (0..n).collect() };
    let objective = Objective::new(&start, *device, p, target, cfg.interpolation)?;
    let limit = 1.0 - 1e-12;
    let u0: Vec<f64> = free.iter().map(|&k| (start.knots[k] / bound).clamp(-limit, limit).atanh()).collect();
    let to_knots = |u: &[f64]| {
        let mut knots = start.knots.clone();
        for (&k, ui) in free.iter().zip(u) {
            knots[k] = bound * ui.tanh();
        }
        knots
    };

    let eval = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
        let knots = to_knots(u);
        let (v, gk) = match cfg.gradient_mode {
            GradientMode::Adjoint => objective.value_and_gradient(&knots)?,
            GradientMode::FiniteDifference => {
                let mut work = knots.clone();
                let mut g = vec![0.0; n];
                for &k in &free {
                    let x = work[k];
                    work[k] = x + cfg.fd_step;
                    let fp = objective.value(&work)?;
                    work[k] = x - cfg.fd_step;
                    let fm = objective.value(&work)?;
                    work[k] = x;
                    g[k] = (fp - fm) / (2.0 * cfg.fd_step);
                }
                (objective.value(&knots)?, g)
            }
        };
        let gu = free.iter().zip(u).map(|(&k, ui)| gk[k] * bound * (1.0 - ui.tanh().powi(2))).collect();
        Ok((v, gu))
    };

    let settings = LbfgsSettings {
        max_iterations: cfg.max_iterations,
        f_tol: cfg.convergence_tol,
        target: cfg.target_infidelity,
        ..Default::default()
    };
    let mut history = Vec::new();
    let clock = Instant::now();
    let mut last = 0.0;
    let out = lbfgs::minimize(eval, &u0, &settings, |iter, f, g| {
        let now = clock.elapsed().as_secs_f64() * 1e3;
        let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(IterationRecord { iter, infidelity: f, grad_norm, time_ms: now - last });
        last = now;
    })?;
    if out.termination == Termination::LineSearchFailed {
        log::warn!("line search failed after {} iterations; returning best point", out.iterations);
    }
    let mut final_controls = start.clone();
    final_controls.knots = to_knots(&out.x);
    Ok(OptimizationTrace {
        initial_infidelity: history.first().map(|r| r.infidelity).unwrap_or(f64::NAN),
        history,
        final_controls,
        best_infidelity: out.f,
        termination: out.termination,
        line_search_failed: out.termination == Termination::LineSearchFailed,
        evaluations: out.evaluations,
    })
}
