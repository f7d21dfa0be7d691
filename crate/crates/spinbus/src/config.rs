//! Experiment configuration, read from TOML.
//!
//! Every section has desk-scale defaults; `full_scale` swaps in the dense
//! sweeps. Relative file paths resolve against the config file's directory.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinbus_core::landscape::{digest_json, load_landscape, GeDiffusionConfig, LandscapeProfile, StepModelConfig, ValleyModel};
use spinbus_core::optimizer::{AmplitudeRule, CalibrationConfig, OptimizationConfig};
use spinbus_core::SimParams;

use crate::error::{config, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DephasingStudy,
    FreqSweep,
    GridSweep,
    MagnetScan,
    Ensemble,
    OptimizeOne,
    CalibrateOne,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::DephasingStudy,
        ExperimentKind::FreqSweep,
        ExperimentKind::GridSweep,
        ExperimentKind::MagnetScan,
        ExperimentKind::Ensemble,
        ExperimentKind::OptimizeOne,
        ExperimentKind::CalibrateOne,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::DephasingStudy => "dephasing-study",
            ExperimentKind::FreqSweep => "freq-sweep",
            ExperimentKind::GridSweep => "grid-sweep",
            ExperimentKind::MagnetScan => "magnet-scan",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::OptimizeOne => "optimize-one",
            ExperimentKind::CalibrateOne => "calibrate-one",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Geometric,
}

/// `points` values from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Span {
    pub const fn linear(start: f64, end: f64, points: usize) -> Self {
        Self { start, end, points, spacing: Spacing::Linear }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.end - self.start),
                    Spacing::Geometric => self.start * (self.end / self.start).powf(f),
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> RunResult<()> {
        let finite = self.start.is_finite() && self.end.is_finite();
        if self.points == 0 || !finite || (self.points > 1 && !(self.end > self.start)) {
            return Err(config(format!("{name}: range must be nonempty with start < end")));
        }
        if self.spacing == Spacing::Geometric && !(self.start > 0.0) {
            return Err(config(format!("{name}: geometric spacing needs a positive start")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    GeDiffusion,
    Step,
}

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::GeDiffusion => "ge-diffusion",
            ModelName::Step => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfigs {
    pub ge_diffusion: GeDiffusionConfig,
    pub step: StepModelConfig,
}

impl ModelConfigs {
    pub fn model(&self, name: ModelName) -> ValleyModel {
        match name {
            ModelName::GeDiffusion => ValleyModel::GeDiffusion(self.ge_diffusion),
            ModelName::Step => ValleyModel::Step(self.step),
        }
    }
}

fn default_length() -> f64 {
    200.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LandscapeSource {
    /// A landscape file; `center` defaults to the middle of its range.
    File { path: PathBuf, center: Option<f64> },
    /// Generated from a valley model; `seed` defaults to the run seed.
    Generate { model: ModelName, seed: Option<u64>, center: Option<f64> },
    /// Constant splitting (meV) with zero valley phase.
    Flat {
        splitting: f64,
        #[serde(default = "default_length")]
        length: f64,
        center: Option<f64>,
    },
}

impl Default for LandscapeSource {
    fn default() -> Self {
        LandscapeSource::Flat { splitting: 0.1, length: default_length(), center: None }
    }
}

impl LandscapeSource {
    pub fn center(&self) -> Option<f64> {
        match self {
            LandscapeSource::File { center, .. }
            | LandscapeSource::Generate { center, .. }
            | LandscapeSource::Flat { center, .. } => *center,
        }
    }
}

/// Optional overrides on top of an experiment's optimizer defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOverrides {
    pub max_iterations: Option<usize>,
    pub knot_rate: Option<f64>,
    pub gradient_mode: Option<spinbus_core::optimizer::GradientMode>,
    pub convergence_tol: Option<f64>,
    pub control_bounds: Option<f64>,
    pub boundary_pinning: Option<bool>,
    /// Early-stop threshold; zero or negative disables early stopping.
    pub target_infidelity: Option<f64>,
}

impl OptimizerOverrides {
    pub fn apply(&self, mut base: OptimizationConfig) -> OptimizationConfig {
        if let Some(v) = self.max_iterations {
            base.max_iterations = v;
        }
        if let Some(v) = self.knot_rate {
            base.knot_rate = v;
        }
        if let Some(v) = self.gradient_mode {
            base.gradient_mode = v;
        }
        if let Some(v) = self.convergence_tol {
            base.convergence_tol = v;
        }
        if let Some(v) = self.control_bounds {
            base.control_bounds = v;
        }
        if let Some(v) = self.boundary_pinning {
            base.boundary_pinning = v;
        }
        if let Some(v) = self.target_infidelity {
            base.target_infidelity = (v > 0.0).then_some(v);
        }
        base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeChoice {
    /// Keep the experiment's nominal amplitude for every candidate `T_g`.
    #[default]
    Fixed,
    /// Use the analytical π-pulse amplitude for each candidate `T_g`.
    Analytical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub budget: usize,
    pub initial_points: usize,
    /// Half-width of the frequency interval around the frame frequency (GHz).
    pub omega_halfwidth: f64,
    /// Relative half-width of the gate-time interval around the analytical value.
    pub tg_relative: f64,
    pub amplitude: AmplitudeChoice,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { budget: 60, initial_points: 10, omega_halfwidth: 3e-3, tg_relative: 0.2, amplitude: AmplitudeChoice::Fixed }
    }
}

impl CalibrationSettings {
    pub fn build(&self, omega: f64, tg: f64, x0: f64, knot_rate: f64, seed: u64) -> CalibrationConfig {
        let amplitude = match self.amplitude {
            AmplitudeChoice::Fixed => AmplitudeRule::Fixed(x0),
            AmplitudeChoice::Analytical => AmplitudeRule::Analytical,
        };
        let mut c = CalibrationConfig::around(omega, self.omega_halfwidth, tg, self.tg_relative, amplitude, seed);
        c.budget = self.budget;
        c.initial_points = self.initial_points;
        c.knot_rate = knot_rate;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephasingSection {
    /// Longitudinal gradient sweep (mT/nm).
    pub db_par: Span,
    /// Gradient ratio `∂b⊥/∂b∥`.
    pub q: f64,
    /// Analytical gate times (ns); amplitudes follow from the π-pulse relation.
    pub tg: Span,
    /// Operating points on the landscape (nm); empty means the landscape center.
    pub centers: Vec<f64>,
    pub kappa_z: Vec<f64>,
    /// Number of best analytical gate times that are also optimized.
    pub optimize_best: usize,
}

impl Default for DephasingSection {
    fn default() -> Self {
        Self {
            db_par: Span::linear(0.02, 0.2, 4),
            q: 5.0,
            tg: Span { start: 5.0, end: 360.0, points: 8, spacing: Spacing::Geometric },
            centers: Vec::new(),
            kappa_z: vec![1e-6, 5e-6],
            optimize_best: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqSection {
    /// Drive frequencies (GHz).
    pub omega: Span,
    /// Amplitudes (nm).
    pub x0: Span,
    pub kappa_z: Vec<f64>,
    /// Fixed gate time (ns); by default the analytical time for each amplitude.
    pub tg: Option<f64>,
}

impl Default for FreqSection {
    fn default() -> Self {
        Self { omega: Span::linear(0.555, 0.567, 21), x0: Span::linear(2.5, 20.0, 8), kappa_z: vec![0.0, 5e-6], tg: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x0: Span,
    pub tg: Span,
    pub kappa_z: f64,
    /// Drive frequency (GHz); defaults to the frame frequency.
    pub omega: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x0: Span::linear(2.0, 20.0, 8), tg: Span::linear(5.0, 60.0, 8), kappa_z: 5e-6, omega: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnetSection {
    /// Operating positions along the device (nm).
    pub positions: Span,
    pub x0: f64,
    pub models: Vec<ModelName>,
    pub kappa_z: Vec<f64>,
}

impl Default for MagnetSection {
    fn default() -> Self {
        Self {
            positions: Span::linear(50.0, 150.0, 8),
            x0: 10.0,
            models: vec![ModelName::GeDiffusion, ModelName::Step],
            kappa_z: vec![1e-6, 5e-6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub devices: usize,
    pub models: Vec<ModelName>,
    pub kappa_z: Vec<f64>,
    pub x0: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            devices: 100,
            models: vec![ModelName::GeDiffusion, ModelName::Step],
            kappa_z: vec![1e-6],
            x0: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleSection {
    pub x0: f64,
    /// Gate time (ns); defaults to the analytical value for `x0`.
    pub tg: Option<f64>,
    /// Drive frequency (GHz); defaults to the frame frequency.
    pub omega: Option<f64>,
}

impl Default for SingleSection {
    fn default() -> Self {
        Self { x0: 10.0, tg: None, omega: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub full_scale: bool,
    #[serde(default)]
    pub params: SimParams,
    #[serde(default)]
    pub landscape: LandscapeSource,
    #[serde(default)]
    pub models: ModelConfigs,
    #[serde(default)]
    pub optimizer: OptimizerOverrides,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub dephasing: DephasingSection,
    #[serde(default)]
    pub freq: FreqSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub magnet: MagnetSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub single: SingleSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config deserializes")
    }
}

impl ExperimentConfig {
    /// Parses and validates a config; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> RunResult<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        if let LandscapeSource::File { path, .. } = &mut cfg.landscape {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        if cfg.full_scale {
            cfg.apply_full_scale();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base)
    }

    /// Switches every sweep to its full-scale size.
    pub fn apply_full_scale(&mut self) {
        self.full_scale = true;
        self.dephasing.db_par.points = 10;
        self.dephasing.tg.points = 36;
        self.dephasing.optimize_best = 3;
        self.freq.omega.points = 81;
        self.freq.x0.points = 36;
        self.grid.x0.points = 19;
        self.grid.tg.points = 23;
        self.magnet.positions.points = 41;
        self.ensemble.devices = 1000;
        self.ensemble.kappa_z = vec![1e-6, 5e-6];
        self.optimizer.target_infidelity = Some(0.0);
    }

    pub fn validate(&self) -> RunResult<()> {
        self.params.validate().map_err(|e| config(e.to_string()))?;
        if self.workers == Some(0) {
            return Err(config("workers must be at least 1"));
        }
        match &self.landscape {
            LandscapeSource::File { path, .. } => {
                if !path.is_file() {
                    return Err(config(format!("landscape file {} does not exist", path.display())));
                }
            }
            LandscapeSource::Flat { splitting, length, .. } => {
                if !(splitting.is_finite() && *splitting >= 0.0 && *length > 0.0) {
                    return Err(config("flat landscape needs splitting >= 0 and length > 0"));
                }
            }
            LandscapeSource::Generate { model, .. } => {
                self.models.model(*model).generate(0).map(|_| ()).map_err(|e| config(e.to_string()))?;
            }
        }
        self.dephasing.db_par.validate("dephasing.db_par")?;
        self.dephasing.tg.validate("dephasing.tg")?;
        self.freq.omega.validate("freq.omega")?;
        self.freq.x0.validate("freq.x0")?;
        self.grid.x0.validate("grid.x0")?;
        self.grid.tg.validate("grid.tg")?;
        self.magnet.positions.validate("magnet.positions")?;
        let nonempty = [
            ("dephasing.kappa_z", self.dephasing.kappa_z.is_empty()),
            ("freq.kappa_z", self.freq.kappa_z.is_empty()),
            ("magnet.kappa_z", self.magnet.kappa_z.is_empty()),
            ("magnet.models", self.magnet.models.is_empty()),
            ("ensemble.kappa_z", self.ensemble.kappa_z.is_empty()),
            ("ensemble.models", self.ensemble.models.is_empty()),
        ];
        if let Some((name, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(config(format!("{name} must not be empty")));
        }
        if self.ensemble.devices == 0 {
            return Err(config("ensemble needs at least one device"));
        }
        if !(self.dephasing.q > 0.0) {
            return Err(config("dephasing.q must be positive"));
        }
        for x0 in [self.magnet.x0, self.ensemble.x0, self.single.x0] {
            if !(x0 > 0.0 && x0.is_finite()) {
                return Err(config("amplitudes must be positive"));
            }
        }
        self.optimizer.apply(OptimizationConfig::default()).validate().map_err(|e| config(e.to_string()))?;
        let c = self.calibration.build(0.56, 20.0, 10.0, spinbus_core::pulse::DEFAULT_KNOT_RATE, 0);
        c.validate().map_err(|e| config(e.to_string()))?;
        Ok(())
    }

    /// Optimizer settings for experiment runs. Desk-scale runs stop once the
    /// infidelity reaches 5e-4; full-scale runs use every iteration.
    pub fn optimization(&self) -> OptimizationConfig {
        let base = OptimizationConfig {
            target_infidelity: (!self.full_scale).then_some(5e-4),
            ..OptimizationConfig::default()
        };
        self.optimizer.apply(base)
    }

    /// SHA-256 over everything that affects numerical results: the config
    /// without seed, worker count and output location, plus the contents of
    /// any referenced landscape file.
    pub fn digest(&self) -> RunResult<String> {
        let mut v = serde_json::to_value(self).map_err(|e| config(e.to_string()))?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        for key in ["seed", "workers", "output", "experiment"] {
            obj.remove(key);
        }
        if let LandscapeSource::File { path, .. } = &self.landscape {
            let bytes = std::fs::read(path)?;
            let file_digest = hex::encode(Sha256::digest(&bytes));
            let land = obj.get_mut("landscape").and_then(|l| l.as_object_mut()).expect("landscape table");
            land.remove("path");
            land.insert("file_sha256".into(), file_digest.into());
        }
        Ok(digest_json(&v))
    }

    /// Loads or generates the configured landscape.
    pub fn load_landscape(&self) -> RunResult<LandscapeProfile> {
        Ok(match &self.landscape {
            LandscapeSource::File { path, .. } => load_landscape(path)?,
            LandscapeSource::Generate { model, seed, .. } => self.models.model(*model).generate(seed.unwrap_or(self.seed))?,
            LandscapeSource::Flat { splitting, length, .. } => {
                LandscapeProfile::flat(0.0, *length, 0.1, 0.5 * splitting, 0.0)?
            }
        })
    }

    /// Operating point on `landscape`: the configured center or its midpoint.
    pub fn center_on(&self, landscape: &LandscapeProfile) -> f64 {
        self.landscape.center().unwrap_or(0.5 * (landscape.x_start() + landscape.x_end()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("", Path::new(".")).unwrap();
        assert_eq!(c.grid.x0.points, 8);
        assert_eq!(c.ensemble.devices, 100);
        assert_eq!(c.optimization().target_infidelity, Some(5e-4));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("bogus = 1", Path::new(".")).is_err());
        assert!(ExperimentConfig::from_toml_str("[params]\nkappa = 1.0", Path::new(".")).is_err());
        assert!(ExperimentConfig::from_toml_str("[grid]\nx0 = { start = 2.0, end = 1.0, points = 3 }", Path::new(".")).is_err());
    }

    #[test]
    fn missing_landscape_file_is_a_config_error() {
        let text = "[landscape]\nsource = \"file\"\npath = \"does/not/exist.json\"";
        let err = ExperimentConfig::from_toml_str(text, Path::new("/nonexistent")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn spans() {
        assert_eq!(Span::linear(1.0, 3.0, 3).values(), vec![1.0, 2.0, 3.0]);
        let g = Span { start: 1.0, end: 100.0, points: 3, spacing: Spacing::Geometric }.values();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert_eq!(Span::linear(4.0, 4.0, 1).values(), vec![4.0]);
    }

    #[test]
    fn digest_ignores_seed_workers_and_output() {
        let a = ExperimentConfig::from_toml_str("seed = 1\nworkers = 2", Path::new(".")).unwrap();
        let b = ExperimentConfig::from_toml_str("seed = 9\n[output]\ndir = \"elsewhere\"", Path::new(".")).unwrap();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        let c = ExperimentConfig::from_toml_str("[params]\nkappa_z = 2e-6", Path::new(".")).unwrap();
        assert_ne!(a.digest().unwrap(), c.digest().unwrap());
    }

    #[test]
    fn optimizer_overrides() {
        let c = ExperimentConfig::from_toml_str("[optimizer]\nmax_iterations = 5\ntarget_infidelity = 0.0", Path::new(".")).unwrap();
        let o = c.optimization();
        assert_eq!(o.max_iterations, 5);
        assert_eq!(o.target_infidelity, None);
    }

    #[test]
    fn full_scale_switches_sizes() {
        let c = ExperimentConfig::from_toml_str("full_scale = true", Path::new(".")).unwrap();
        assert_eq!(c.ensemble.devices, 1000);
        assert_eq!(c.optimization().target_infidelity, None);
    }
}
