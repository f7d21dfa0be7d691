//! Electron trajectories: Gaussian-ramp envelope, sinusoidal EDSR drive,
//! optimizer knots and their upsampling onto the propagation grid.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_KNOT_RATE: f64 = 10.0;
pub const DEFAULT_RISE_TIME: f64 = 1.0;
/// Bound on |position| (nm). A π rotation within 5 ns needs a mean
/// displacement of about 36 nm at the default gradient.
pub const DEFAULT_CONTROL_BOUND: f64 = 60.0;

/// Gaussian ramp envelope: rises from 0 at `t = 0` to 1 at `t_r`, flat, and
/// falls back to 0 at `tg`.
pub fn envelope(t: f64, tg: f64, t_r: f64) -> Result<f64> {
    if !(0.0..=tg).contains(&t) {
        return Err(invalid(format!("envelope time {t} outside [0, {tg}]")));
    }
    if !(t_r > 0.0 && tg >= 2.0 * t_r) {
        return Err(invalid("envelope needs 0 < 2 t_r <= tg"));
    }
    Ok(envelope_unchecked(t, tg, t_r))
}

pub(crate) fn envelope_unchecked(t: f64, tg: f64, t_r: f64) -> f64 {
    if t < t_r {
        ramp(t - t_r, t_r)
    } else if t <= tg - t_r {
        1.0
    } else {
        ramp(t - tg + t_r, t_r)
    }
}

/// `α [exp(−u²/2σ²) − exp(−t_r²/2σ²)]` with `σ = t_r/4`, normalized to 1 at `u = 0`.
fn ramp(u: f64, t_r: f64) -> f64 {
    let sigma = t_r / 4.0;
    let floor = (-(t_r * t_r) / (2.0 * sigma * sigma)).exp();
    let alpha = 1.0 / (1.0 - floor);
    alpha * ((-(u * u) / (2.0 * sigma * sigma)).exp() - floor)
}

/// Pulse area lost to the two ramps relative to a rectangular envelope,
/// `2 ∫₀^{t_r} (1 − G) dt` (ns).
pub fn ramp_area_deficit(t_r: f64) -> f64 {
    let sigma = t_r / 4.0;
    let floor = (-(t_r * t_r) / (2.0 * sigma * sigma)).exp();
    let alpha = 1.0 / (1.0 - floor);
    let gauss = sigma * (PI / 2.0).sqrt() * statrs::function::erf::erf(t_r / (sigma * 2f64.sqrt()));
    2.0 * (t_r - alpha * (gauss - floor * t_r))
}

/// Parameters of a shaped sinusoidal trajectory `G(t)·x₀ sin(2π ω t + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    /// Amplitude (nm).
    pub x0: f64,
    /// Drive frequency (GHz, cyclic).
    pub omega: f64,
    /// Phase (rad).
    pub phi: f64,
    /// Gate time (ns).
    pub tg: f64,
    /// Envelope rise time (ns).
    pub t_r: f64,
}

impl TrajectorySpec {
    pub fn new(x0: f64, omega: f64, tg: f64) -> Self {
        Self { x0, omega, phi: 0.0, tg, t_r: DEFAULT_RISE_TIME }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return Err(invalid("amplitude must be non-negative"));
        }
        if !(self.omega > 0.0) {
            return Err(invalid("drive frequency must be positive"));
        }
        if !(self.t_r > 0.0 && self.tg > 2.0 * self.t_r) || !self.tg.is_finite() {
            return Err(invalid(format!(
                "gate time {} must exceed twice the rise time {}",
                self.tg, self.t_r
            )));
        }
        Ok(())
    }

    /// Shaped position at time `t`.
    pub fn position(&self, t: f64) -> f64 {
        envelope_unchecked(t, self.tg, self.t_r) * self.x0 * (2.0 * PI * self.omega * t + self.phi).sin()
    }
}

/// Optimizable trajectory: positions at uniformly spaced knots spanning `[0, tg]`.
///
/// There are `round(tg·knot_rate) + 1` knots so that both pulse edges are knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    pub knots: Vec<f64>,
    pub tg: f64,
    pub knot_rate: f64,
    pub bound: f64,
}

impl ControlVector {
    pub fn knot_count(tg: f64, knot_rate: f64) -> usize {
        (tg * knot_rate).round().max(1.0) as usize + 1
    }

    pub fn zeros(tg: f64, knot_rate: f64) -> Result<Self> {
        let cv = Self {
            knots: vec![0.0; Self::knot_count(tg, knot_rate)],
            tg,
            knot_rate,
            bound: DEFAULT_CONTROL_BOUND,
        };
        cv.validate()?;
        Ok(cv)
    }

    pub fn from_knots(knots: Vec<f64>, tg: f64, knot_rate: f64) -> Result<Self> {
        let cv = Self { knots, tg, knot_rate, bound: DEFAULT_CONTROL_BOUND };
        cv.validate()?;
        Ok(cv)
    }

    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        self.bound = bound;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tg > 0.0 && self.tg.is_finite()) || !(self.knot_rate >= 1.0) {
            return Err(invalid("control vector needs tg > 0 and knot_rate >= 1"));
        }
        let want = Self::knot_count(self.tg, self.knot_rate);
        if self.knots.len() != want {
            return Err(invalid(format!("expected {want} knots, got {}", self.knots.len())));
        }
        if !(self.bound > 0.0) {
            return Err(invalid("control bound must be positive"));
        }
        for k in &self.knots {
            if !k.is_finite() {
                return Err(invalid("knots must be finite"));
            }
            if k.abs() > self.bound * (1.0 + 1e-12) {
                return Err(invalid(format!("knot {k} nm exceeds bound {} nm", self.bound)));
            }
        }
        Ok(())
    }

    /// Time between knots (ns).
    pub fn spacing(&self) -> f64 {
        self.tg / (self.knots.len() - 1) as f64
    }

    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    /// Knot index and linear weights `(k, 1−w, w)` for time `t`.
    pub fn interp_weights(&self, t: f64) -> (usize, f64, f64) {
        let n = self.knots.len();
        let u = (t / self.spacing()).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let w = u - k as f64;
        (k, 1.0 - w, w)
    }

    /// Piecewise-linear interpolant at `t` (clamped to the end knots).
    pub fn value_at(&self, t: f64) -> f64 {
        let (k, a, b) = self.interp_weights(t);
        a * self.knots[k] + b * self.knots[k + 1]
    }
}

/// Samples the shaped sinusoid at the knot times.
pub fn sinusoid_controls(spec: &TrajectorySpec, knot_rate: f64) -> Result<ControlVector> {
    spec.validate()?;
    let n = ControlVector::knot_count(spec.tg, knot_rate);
    let spacing = spec.tg / (n - 1) as f64;
    let knots: Vec<f64> = (0..n).map(|k| spec.position(k as f64 * spacing)).collect();
    let cv = ControlVector { knots, tg: spec.tg, knot_rate, bound: DEFAULT_CONTROL_BOUND.max(spec.x0) };
    cv.validate()?;
    Ok(cv)
}

/// Piecewise-constant positions on the propagation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedTrajectory {
    pub dt: f64,
    pub tg: f64,
    /// One position per step (nm).
    pub positions: Vec<f64>,
}

impl DiscretizedTrajectory {
    /// Number of steps `ceil(tg/dt)`; the last step is shortened to end at `tg`.
    pub fn step_count(tg: f64, dt: f64) -> usize {
        ((tg / dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn duration(&self, i: usize) -> f64 {
        step_duration(i, self.positions.len(), self.dt, self.tg)
    }

    /// Constant position `x` for `tg`.
    pub fn constant(x: f64, tg: f64, dt: f64) -> Self {
        Self { dt, tg, positions: vec![x; Self::step_count(tg, dt)] }
    }

    /// Samples an arbitrary function at the step midpoints.
    pub fn from_fn(tg: f64, dt: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = Self::step_count(tg, dt);
        let positions = (0..n).map(|i| f(step_midpoint(i, n, dt, tg))).collect();
        Self { dt, tg, positions }
    }
}

pub(crate) fn step_duration(i: usize, n: usize, dt: f64, tg: f64) -> f64 {
    if i + 1 == n {
        tg - dt * (n - 1) as f64
    } else {
        dt
    }
}

pub(crate) fn step_midpoint(i: usize, n: usize, dt: f64, tg: f64) -> f64 {
    dt * i as f64 + 0.5 * step_duration(i, n, dt, tg)
}

/// How knots are turned into per-step positions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Interpolation {
    /// Linear interpolation sampled at step midpoints.
    #[default]
    Linear,
    /// Linear interpolation followed by a Gaussian filter of the given std (ns).
    Smoothed { sigma: f64 },
}

/// Linear map from knots to step positions, stored sparsely so that the
/// optimizer can apply its transpose.
#[derive(Debug, Clone)]
pub struct Upsampler {
    /// Per step: (knot index, weight) entries.
    rows: Vec<Vec<(usize, f64)>>,
    dt: f64,
    tg: f64,
    knots: usize,
}

impl Upsampler {
    pub fn new(controls: &ControlVector, dt: f64, mode: Interpolation) -> Result<Self> {
        controls.validate()?;
        if !(dt > 0.0) || dt > controls.spacing() * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "dt {dt} ns too large for knot spacing {} ns",
                controls.spacing()
            )));
        }
        let n = DiscretizedTrajectory::step_count(controls.tg, dt);
        let linear: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let (k, a, b) = controls.interp_weights(step_midpoint(i, n, dt, controls.tg));
                vec![(k, a), (k + 1, b)]
            })
            .collect();
        let rows = match mode {
            Interpolation::Linear => linear,
            Interpolation::Smoothed { sigma } => {
                if !(sigma > 0.0) {
                    return Err(invalid("smoothing width must be positive"));
                }
                smooth_rows(&linear, dt, sigma, controls.knots.len())
            }
        };
        Ok(Self { rows, dt, tg: controls.tg, knots: controls.knots.len() })
    }

    pub fn apply(&self, knots: &[f64]) -> DiscretizedTrajectory {
        debug_assert_eq!(knots.len(), self.knots);
        let positions = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(k, w)| w * knots[*k]).sum())
            .collect();
        DiscretizedTrajectory { dt: self.dt, tg: self.tg, positions }
    }

    /// Transpose: maps per-step sensitivities onto knots.
    pub fn apply_transpose(&self, per_step: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.knots];
        for (row, g) in self.rows.iter().zip(per_step) {
            for (k, w) in row {
                out[*k] += w * g;
            }
        }
        out
    }
}

fn smooth_rows(linear: &[Vec<(usize, f64)>], dt: f64, sigma: f64, knots: usize) -> Vec<Vec<(usize, f64)>> {
    let n = linear.len();
    let half = (4.0 * sigma / dt).ceil() as isize;
    let weights: Vec<f64> = (-half..=half)
        .map(|j| {
            let r = j as f64 * dt;
            (-(r * r) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    (0..n as isize)
        .map(|i| {
            let mut acc = vec![0.0; knots];
            let mut total = 0.0;
            for (o, w) in (-half..=half).zip(&weights) {
                let j = i + o;
                if j < 0 || j >= n as isize {
                    continue;
                }
                total += w;
                for (k, lw) in &linear[j as usize] {
                    acc[*k] += w * lw;
                }
            }
            acc.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (k, v / total))
                .collect()
        })
        .collect()
}

/// Piecewise-linear upsampling of knots onto the `dt` grid.
pub fn upsample(controls: &ControlVector, dt: f64) -> Result<DiscretizedTrajectory> {
    Ok(Upsampler::new(controls, dt, Interpolation::Linear)?.apply(&controls.knots))
}

/// On-disk pulse document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    #[serde(rename = "Tg_ns")]
    pub tg_ns: f64,
    pub knot_rate_per_ns: f64,
    pub knots_nm: Vec<f64>,
}

impl ControlVector {
    pub fn to_json_string(&self) -> String {
        let f = PulseFile {
            tg_ns: self.tg,
            knot_rate_per_ns: self.knot_rate,
            knots_nm: self.knots.clone(),
        };
        serde_json::to_string_pretty(&f).expect("pulse serializes")
    }

    /// Parses a pulse document. The bound is widened to fit the stored knots.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: PulseFile = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        let widest = f.knots_nm.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let cv = ControlVector {
            knots: f.knots_nm,
            tg: f.tg_ns,
            knot_rate: f.knot_rate_per_ns,
            bound: DEFAULT_CONTROL_BOUND.max(widest),
        };
        cv.validate().map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(cv)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn envelope_fixed_points() {
        let (tg, tr) = (10.0, 1.0);
        assert!(envelope(0.0, tg, tr).unwrap().abs() < 1e-15);
        assert!((envelope(tr, tg, tr).unwrap() - 1.0).abs() < 1e-15);
        assert!((envelope(tg - tr, tg, tr).unwrap() - 1.0).abs() < 1e-15);
        assert!(envelope(tg, tg, tr).unwrap().abs() < 1e-15);
        let alpha = 1.0 / (1.0 - (-8.0f64).exp());
        let want = alpha * ((-2.0f64).exp() - (-8.0f64).exp());
        assert!((envelope(0.5, tg, tr).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.135045).abs() < 1e-6);
        assert!(envelope(-0.1, tg, tr).is_err());
        assert!(envelope(10.1, tg, tr).is_err());
    }

    #[test]
    fn envelope_flat_top_and_monotone_ramps() {
        let (tg, tr) = (7.0, 1.0);
        for i in 0..=100 {
            let t = tr + (tg - 2.0 * tr) * i as f64 / 100.0;
            assert_eq!(envelope(t, tg, tr).unwrap(), 1.0);
        }
        let mut prev = -1.0;
        for i in 0..=200 {
            let g = envelope(tr * i as f64 / 200.0, tg, tr).unwrap();
            assert!(g >= prev);
            prev = g;
        }
        let mut prev = 2.0;
        for i in 0..=200 {
            let g = envelope(tg - tr + tr * i as f64 / 200.0, tg, tr).unwrap();
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn ramp_deficit_matches_quadrature() {
        let tr = 1.0;
        let n = 20000;
        let h = tr / n as f64;
        let mut area = 0.0;
        for i in 0..n {
            area += envelope_unchecked((i as f64 + 0.5) * h, 10.0, tr) * h;
        }
        assert!((ramp_area_deficit(tr) - 2.0 * (tr - area)).abs() < 1e-8);
        assert!((ramp_area_deficit(tr) - 1.374).abs() < 2e-3);
    }

    #[test]
    fn sinusoid_knots() {
        let spec = TrajectorySpec::new(10.0, 0.5598, 18.0);
        let cv = sinusoid_controls(&spec, 10.0).unwrap();
        assert_eq!(cv.knots.len(), 181);
        assert_eq!(cv.knots[0], 0.0);
        assert!(cv.knots[180].abs() < 1e-12);
        // Quarter period of the drive inside the flat top.
        let t = 3.25 / 0.5598;
        assert!((spec.position(t) - 10.0).abs() < 1e-9);
        let zero = sinusoid_controls(&TrajectorySpec::new(0.0, 0.5598, 18.0), 10.0).unwrap();
        assert!(zero.knots.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn upsample_step_count_and_constants() {
        let cv = ControlVector::from_knots(vec![3.0; 181], 18.0, 10.0).unwrap();
        let tr = upsample(&cv, 8e-4).unwrap();
        assert_eq!(tr.len(), 22500);
        assert!(tr.positions.iter().all(|p| (*p - 3.0).abs() < 1e-15));
        assert!(upsample(&cv, 0.2).is_err());
    }

    #[test]
    fn upsample_midpoint_ramp() {
        let cv = ControlVector::from_knots(vec![0.0, 1.0], 0.1, 10.0).unwrap();
        let tr = upsample(&cv, 0.01).unwrap();
        assert_eq!(tr.len(), 10);
        for (i, p) in tr.positions.iter().enumerate() {
            assert!((p - (0.05 + 0.1 * i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn shortened_last_step() {
        let tr = DiscretizedTrajectory::constant(0.0, 1.0005, 1e-3);
        assert_eq!(tr.len(), 1001);
        assert!((tr.duration(1000) - 5e-4).abs() < 1e-12);
        let total: f64 = (0..tr.len()).map(|i| tr.duration(i)).sum();
        assert!((total - 1.0005).abs() < 1e-12);
    }

    #[test]
    fn shaped_sinusoid_returns_to_rest() {
        let spec = TrajectorySpec::new(10.0, 0.5598, 17.86);
        let cv = sinusoid_controls(&spec, 10.0).unwrap();
        assert!(cv.value_at(0.0).abs() < 1e-9);
        assert!(cv.value_at(cv.tg).abs() < 1e-9);
        let tr = upsample(&cv, 8e-4).unwrap();
        assert!(tr.positions[0].abs() < 1e-4 && tr.positions.last().unwrap().abs() < 1e-4);
        assert!(tr.positions.iter().all(|p| p.abs() <= spec.x0 + 1e-12));
    }

    #[test]
    fn pulse_file_round_trip_and_errors() {
        let spec = TrajectorySpec::new(7.3, 0.56, 6.0);
        let cv = sinusoid_controls(&spec, 10.0).unwrap();
        let back = ControlVector::from_json_str(&cv.to_json_string()).unwrap();
        assert_eq!(back.knots, cv.knots);
        assert!(ControlVector::from_json_str("{\"Tg_ns\": 6.0").is_err());
        assert!(ControlVector::from_json_str(r#"{"Tg_ns":6.0,"knot_rate_per_ns":10.0,"knots_nm":[0.0]}"#).is_err());
    }

    #[test]
    fn smoothed_transpose_is_adjoint() {
        let cv = ControlVector::from_knots((0..21).map(|k| (k as f64 * 0.7).sin()).collect(), 2.0, 10.0).unwrap();
        let up = Upsampler::new(&cv, 1e-3, Interpolation::Smoothed { sigma: 0.05 }).unwrap();
        let y: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.013).cos()).collect();
        let ax = up.apply(&cv.knots).positions;
        let aty = up.apply_transpose(&y);
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = cv.knots.iter().zip(&aty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    proptest! {
        #[test]
        fn upsample_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
            let n = 31;
            let u: Vec<f64> = (0..n).map(|k| ((k as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
            let v: Vec<f64> = (0..n).map(|k| ((k as u64 * 7 + seed) % 11) as f64 - 5.0).collect();
            let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let mk = |k: Vec<f64>| ControlVector { knots: k, tg: 3.0, knot_rate: 10.0, bound: 1e3 };
            let up = Upsampler::new(&mk(w.clone()), 4e-3, Interpolation::Linear).unwrap();
            let pw = up.apply(&w).positions;
            let pu = up.apply(&u).positions;
            let pv = up.apply(&v).positions;
            for i in 0..pw.len() {
                prop_assert!((pw[i] - (a * pu[i] + b * pv[i])).abs() < 1e-12);
            }
        }
    }
}
