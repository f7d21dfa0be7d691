//! Task lists and per-task execution for every experiment.
//!
//! A task depends only on the config, the run seed and its own coordinates,
//! never on other tasks, so tasks may run in any order on any worker.

use spinbus_core::fidelity::{evaluate_trajectory, GateTarget};
use spinbus_core::landscape::{derive_seed, Device, LandscapeProfile};
use spinbus_core::model::{analytical_amplitude, analytical_gate_time, frame_frequency, t2_star};
use spinbus_core::optimizer::{bayesian_calibrate, optimize_trajectory, CalibrationResult, OptimizationTrace};
use spinbus_core::pulse::{sinusoid_controls, TrajectorySpec};
use spinbus_core::{ControlVector, SimParams};

use crate::config::{ExperimentConfig, ExperimentKind, ModelName};
use crate::error::{config, RunResult};
use crate::record::ResultRecord;

/// Salt separating the step-model device seeds from the Ge-diffusion ones.
const STEP_SALT: u64 = 0x5354_4550;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Dephasing { kappa_z: f64, center: f64, db_par: f64 },
    Freq { kappa_z: f64, x0: f64, omega: f64 },
    Grid { x0: f64, tg: f64 },
    Magnet { model: ModelName, kappa_z: f64, position: f64 },
    Ensemble { model: ModelName, kappa_z: f64, device: usize },
    Single,
}

/// Pulse and optimizer history produced by the single-run experiments.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub pulse: Option<ControlVector>,
    pub trace: Option<OptimizationTrace>,
}

pub struct TaskOutput {
    pub record: ResultRecord,
    pub artifacts: Artifacts,
}

/// Shared read-only inputs resolved once per run.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub digest: String,
    /// The configured landscape, for experiments that use a single device.
    pub landscape: Option<LandscapeProfile>,
    /// One generated device per valley model, for the magnet scan.
    pub magnet_devices: Vec<(ModelName, LandscapeProfile)>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig, kind: ExperimentKind, seed: u64) -> RunResult<Self> {
        let digest = cfg.digest()?;
        let landscape = match kind {
            ExperimentKind::DephasingStudy
            | ExperimentKind::FreqSweep
            | ExperimentKind::GridSweep
            | ExperimentKind::OptimizeOne
            | ExperimentKind::CalibrateOne => Some(cfg.load_landscape()?),
            _ => None,
        };
        let magnet_devices = if kind == ExperimentKind::MagnetScan {
            cfg.magnet
                .models
                .iter()
                .map(|&m| Ok((m, cfg.models.model(m).generate(model_seed(seed, m))?)))
                .collect::<RunResult<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self { cfg, kind, seed, digest, landscape, magnet_devices })
    }

    fn landscape(&self) -> &LandscapeProfile {
        self.landscape.as_ref().expect("single-device experiments load their landscape")
    }

    pub fn tasks(&self) -> RunResult<Vec<Task>> {
        let cfg = self.cfg;
        let mut tasks = Vec::new();
        match self.kind {
            ExperimentKind::DephasingStudy => {
                let centers = if cfg.dephasing.centers.is_empty() {
                    vec![cfg.center_on(self.landscape())]
                } else {
                    cfg.dephasing.centers.clone()
                };
                for &kappa_z in &cfg.dephasing.kappa_z {
                    for &center in &centers {
                        for db_par in cfg.dephasing.db_par.values() {
                            tasks.push(Task::Dephasing { kappa_z, center, db_par });
                        }
                    }
                }
            }
            ExperimentKind::FreqSweep => {
                for &kappa_z in &cfg.freq.kappa_z {
                    for x0 in cfg.freq.x0.values() {
                        for omega in cfg.freq.omega.values() {
                            tasks.push(Task::Freq { kappa_z, x0, omega });
                        }
                    }
                }
            }
            ExperimentKind::GridSweep => {
                for tg in cfg.grid.tg.values() {
                    for x0 in cfg.grid.x0.values() {
                        tasks.push(Task::Grid { x0, tg });
                    }
                }
            }
            ExperimentKind::MagnetScan => {
                for &model in &cfg.magnet.models {
                    for &kappa_z in &cfg.magnet.kappa_z {
                        for position in cfg.magnet.positions.values() {
                            tasks.push(Task::Magnet { model, kappa_z, position });
                        }
                    }
                }
            }
            ExperimentKind::Ensemble => {
                for &model in &cfg.ensemble.models {
                    for &kappa_z in &cfg.ensemble.kappa_z {
                        for device in 0..cfg.ensemble.devices {
                            tasks.push(Task::Ensemble { model, kappa_z, device });
                        }
                    }
                }
            }
            ExperimentKind::OptimizeOne | ExperimentKind::CalibrateOne => tasks.push(Task::Single),
        }
        if tasks.is_empty() {
            return Err(config("experiment has no tasks"));
        }
        Ok(tasks)
    }

    pub fn run(&self, index: usize, task: Task) -> RunResult<TaskOutput> {
        let mut record = ResultRecord::new(self.kind, index, &self.digest, self.seed);
        let mut artifacts = Artifacts::default();
        let task_seed = derive_seed(self.seed, index as u64);
        match task {
            Task::Dephasing { kappa_z, center, db_par } => self.dephasing(&mut record, kappa_z, center, db_par)?,
            Task::Freq { kappa_z, x0, omega } => {
                let p = with_kappa(&self.cfg.params, kappa_z);
                let tg = match self.cfg.freq.tg {
                    Some(tg) => tg,
                    None => analytical_gate_time(&p, x0)?,
                };
                let device = Device::new(self.landscape(), self.cfg.center_on(self.landscape()))?;
                coords(&mut record, &[("kappa_z_mev", kappa_z), ("x0_nm", x0), ("omega_ghz", omega), ("tg_ns", tg)]);
                record.analytical = Some(sinusoid_infidelity(&device, &p, x0, omega, tg, self.knot_rate())?);
            }
            Task::Grid { x0, tg } => {
                let p = with_kappa(&self.cfg.params, self.cfg.grid.kappa_z);
                let omega = self.cfg.grid.omega.unwrap_or_else(|| frame_frequency(&p));
                let device = Device::new(self.landscape(), self.cfg.center_on(self.landscape()))?;
                coords(&mut record, &[("x0_nm", x0), ("tg_ns", tg), ("omega_ghz", omega)]);
                let start = sinusoid_controls(&TrajectorySpec::new(x0, omega, tg), self.knot_rate())?;
                let trace = self.optimize(&start, &device, &p, tg)?;
                record.analytical = Some(trace.initial_infidelity);
                record.optimized = Some(trace.best_infidelity);
                optimizer_diagnostics(&mut record, &trace);
            }
            Task::Magnet { model, kappa_z, position } => {
                let land = &self.magnet_devices.iter().find(|(m, _)| *m == model).expect("device per model").1;
                record.labels.insert("model".into(), model.as_str().into());
                coords(&mut record, &[("kappa_z_mev", kappa_z), ("position_nm", position)]);
                self.three_way(&mut record, land, position, kappa_z, self.cfg.magnet.x0, task_seed)?;
            }
            Task::Ensemble { model, kappa_z, device } => {
                let land = self.cfg.models.model(model).generate(ensemble_seed(self.seed, model, device))?;
                let center = 0.5 * (land.x_start() + land.x_end());
                record.labels.insert("model".into(), model.as_str().into());
                coords(&mut record, &[("kappa_z_mev", kappa_z), ("device", device as f64), ("position_nm", center)]);
                self.three_way(&mut record, &land, center, kappa_z, self.cfg.ensemble.x0, task_seed)?;
            }
            Task::Single => artifacts = self.single(&mut record, task_seed)?,
        }
        Ok(TaskOutput { record, artifacts })
    }

    fn knot_rate(&self) -> f64 {
        self.cfg.optimization().knot_rate
    }

    fn optimize(&self, start: &ControlVector, device: &Device, p: &SimParams, tg: f64) -> RunResult<OptimizationTrace> {
        let target = GateTarget::y_pi(p, tg)?;
        Ok(optimize_trajectory(start, &self.cfg.optimization(), device, p, &target)?)
    }

    fn calibrate(&self, device: &Device, p: &SimParams, x0: f64, seed: u64) -> RunResult<CalibrationResult> {
        let omega = frame_frequency(p);
        let tg = analytical_gate_time(p, x0)?;
        let c = self.cfg.calibration.build(omega, tg, x0, self.knot_rate(), seed);
        Ok(bayesian_calibrate(&c, device, p)?)
    }

    /// Minimum over the gate-time sweep, with amplitudes from the π-pulse
    /// relation, then optimization at the best few gate times.
    fn dephasing(&self, record: &mut ResultRecord, kappa_z: f64, center: f64, db_par: f64) -> RunResult<()> {
        let sec = &self.cfg.dephasing;
        let mut p = with_kappa(&self.cfg.params, kappa_z).with_q_link(db_par, sec.q);
        let t2 = t2_star(&p)?;
        p.t2_s = t2;
        let land = self.landscape();
        let device = Device::new(land, center)?;
        let omega = frame_frequency(&p);
        coords(record, &[("kappa_z_mev", kappa_z), ("center_nm", center), ("db_par_mt_per_nm", db_par), ("db_perp_mt_per_nm", p.db_perp)]);
        record.t2_star_ns = Some(t2);
        record.diagnostics.insert("splitting_mev".into(), device.splitting_at_center());
        let mut sweep = Vec::new();
        for tg in sec.tg.values() {
            let x0 = analytical_amplitude(&p, tg)?;
            if !(land.contains(center - x0) && land.contains(center + x0)) {
                continue;
            }
            sweep.push((tg, x0, sinusoid_infidelity(&device, &p, x0, omega, tg, self.knot_rate())?));
        }
        if sweep.is_empty() {
            return Err(config("dephasing sweep: no gate time keeps the trajectory on the landscape"));
        }
        record.series = sweep.iter().map(|&(tg, _, inf)| [tg, inf]).collect();
        let mut ranked = sweep.clone();
        ranked.sort_by(|a, b| a.2.total_cmp(&b.2));
        let (tg_best, x0_best, inf_best) = ranked[0];
        record.analytical = Some(inf_best);
        record.diagnostics.insert("analytical_tg_ns".into(), tg_best);
        record.diagnostics.insert("analytical_x0_nm".into(), x0_best);
        let mut best_opt: Option<(f64, OptimizationTrace)> = None;
        for &(tg, x0, _) in ranked.iter().take(sec.optimize_best) {
            let start = sinusoid_controls(&TrajectorySpec::new(x0, omega, tg), self.knot_rate())?;
            let trace = self.optimize(&start, &device, &p, tg)?;
            if best_opt.as_ref().is_none_or(|(_, t)| trace.best_infidelity < t.best_infidelity) {
                best_opt = Some((tg, trace));
            }
        }
        if let Some((tg, trace)) = best_opt {
            record.optimized = Some(trace.best_infidelity);
            record.diagnostics.insert("optimized_tg_ns".into(), tg);
            optimizer_diagnostics(record, &trace);
        }
        Ok(())
    }

    /// Analytical, `(ω, T_g)`-calibrated and trajectory-optimized infidelity
    /// at one operating point. Optimization starts from the better of the
    /// analytical and calibrated pulses.
    fn three_way(&self, record: &mut ResultRecord, land: &LandscapeProfile, center: f64, kappa_z: f64, x0: f64, seed: u64) -> RunResult<()> {
        let p = with_kappa(&self.cfg.params, kappa_z);
        let device = Device::new(land, center)?;
        let omega = frame_frequency(&p);
        let tg = analytical_gate_time(&p, x0)?;
        record.coords.insert("x0_nm".into(), x0);
        record.diagnostics.insert("splitting_mev".into(), device.splitting_at_center());
        let analytical = sinusoid_infidelity(&device, &p, x0, omega, tg, self.knot_rate())?;
        let cal = self.calibrate(&device, &p, x0, seed)?;
        record.analytical = Some(analytical);
        record.calibrated = Some(cal.infidelity);
        record.diagnostics.insert("calibrated_omega_ghz".into(), cal.omega);
        record.diagnostics.insert("calibrated_tg_ns".into(), cal.tg);
        let (omega0, tg0, x00) = if cal.infidelity < analytical { (cal.omega, cal.tg, cal.x0) } else { (omega, tg, x0) };
        let start = sinusoid_controls(&TrajectorySpec::new(x00, omega0, tg0), self.knot_rate())?;
        let trace = self.optimize(&start, &device, &p, tg0)?;
        record.optimized = Some(trace.best_infidelity);
        record.diagnostics.insert("optimized_tg_ns".into(), tg0);
        optimizer_diagnostics(record, &trace);
        Ok(())
    }

    fn single(&self, record: &mut ResultRecord, seed: u64) -> RunResult<Artifacts> {
        let cfg = self.cfg;
        let p = cfg.params;
        let land = self.landscape();
        let center = cfg.center_on(land);
        let device = Device::new(land, center)?;
        let x0 = cfg.single.x0;
        let omega = cfg.single.omega.unwrap_or_else(|| frame_frequency(&p));
        let tg = match cfg.single.tg {
            Some(tg) => tg,
            None => analytical_gate_time(&p, x0)?,
        };
        coords(record, &[("kappa_z_mev", p.kappa_z), ("position_nm", center), ("x0_nm", x0), ("omega_ghz", omega), ("tg_ns", tg)]);
        record.diagnostics.insert("splitting_mev".into(), device.splitting_at_center());
        let start = sinusoid_controls(&TrajectorySpec::new(x0, omega, tg), self.knot_rate())?;
        let target = GateTarget::y_pi(&p, tg)?;
        record.analytical = Some(evaluate_trajectory(&start, &device, &p, &target)?.infidelity);
        if self.kind == ExperimentKind::CalibrateOne {
            let c = cfg.calibration.build(omega, tg, x0, self.knot_rate(), seed);
            let cal = bayesian_calibrate(&c, &device, &p)?;
            record.calibrated = Some(cal.infidelity);
            record.diagnostics.insert("calibrated_omega_ghz".into(), cal.omega);
            record.diagnostics.insert("calibrated_tg_ns".into(), cal.tg);
            record.diagnostics.insert("calibrated_x0_nm".into(), cal.x0);
            let pulse = sinusoid_controls(&TrajectorySpec::new(cal.x0, cal.omega, cal.tg), self.knot_rate())?;
            return Ok(Artifacts { pulse: Some(pulse), trace: None });
        }
        let trace = self.optimize(&start, &device, &p, tg)?;
        record.optimized = Some(trace.best_infidelity);
        optimizer_diagnostics(record, &trace);
        Ok(Artifacts { pulse: Some(trace.final_controls.clone()), trace: Some(trace) })
    }
}

/// Seed of the single device generated for `model` in a magnet scan.
pub fn model_seed(seed: u64, model: ModelName) -> u64 {
    match model {
        ModelName::GeDiffusion => seed,
        ModelName::Step => seed ^ STEP_SALT,
    }
}

/// Seed of ensemble device `device` for `model`.
pub fn ensemble_seed(seed: u64, model: ModelName, device: usize) -> u64 {
    derive_seed(model_seed(seed, model), device as u64)
}

fn with_kappa(p: &SimParams, kappa_z: f64) -> SimParams {
    SimParams { kappa_z, ..*p }
}

fn coords(record: &mut ResultRecord, items: &[(&str, f64)]) {
    for &(k, v) in items {
        record.coords.insert(k.to_owned(), v);
    }
}

fn optimizer_diagnostics(record: &mut ResultRecord, trace: &OptimizationTrace) {
    record.diagnostics.insert("iterations".into(), trace.history.len() as f64);
    record.diagnostics.insert("evaluations".into(), trace.evaluations as f64);
    record.diagnostics.insert("line_search_failed".into(), f64::from(u8::from(trace.line_search_failed)));
}

/// Infidelity of the shaped sinusoid with the given amplitude, frequency and duration.
pub fn sinusoid_infidelity(device: &Device, p: &SimParams, x0: f64, omega: f64, tg: f64, knot_rate: f64) -> RunResult<f64> {
    let controls = sinusoid_controls(&TrajectorySpec::new(x0, omega, tg), knot_rate)?;
    let target = GateTarget::y_pi(p, tg)?;
    Ok(evaluate_trajectory(&controls, device, p, &target)?.infidelity)
}
