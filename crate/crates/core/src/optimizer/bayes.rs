//! Gaussian-process Bayesian optimization over a 2-D box.
//!
//! Inputs are normalized to `[0, 1]²`, so the proposal sequence depends only
//! on the seed and the observed values, not on the interval scales.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::fidelity::{evaluate_trajectory, GateTarget};
use crate::landscape::Device;
use crate::model::analytical_amplitude;
use crate::params::SimParams;
use crate::pulse::{sinusoid_controls, TrajectorySpec, DEFAULT_KNOT_RATE, DEFAULT_RISE_TIME};

/// Floor added to the infidelity before the log transform.
pub const NOISE_FLOOR: f64 = 1e-8;

const LENGTH_GRID: [f64; 6] = [0.05, 0.1, 0.18, 0.3, 0.5, 0.8];
const NUGGET: f64 = 1e-6;
const CANDIDATES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acquisition {
    #[default]
    ExpectedImprovement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    #[serde(rename = "matern-5/2")]
    Matern52,
}

/// How the drive amplitude is chosen for a candidate `(ω, T_g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeRule {
    /// Fixed amplitude (nm); `T_g` then tunes the rotation angle.
    Fixed(f64),
    /// Amplitude from the analytical π-pulse relation for each `T_g`.
    Analytical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Drive-frequency search interval (GHz).
    pub omega_interval: (f64, f64),
    /// Gate-time search interval (ns).
    pub tg_interval: (f64, f64),
    pub budget: usize,
    pub initial_points: usize,
    pub acquisition: Acquisition,
    pub kernel: Kernel,
    pub seed: u64,
    pub amplitude: AmplitudeRule,
    pub knot_rate: f64,
}

impl CalibrationConfig {
    /// Intervals centred on `omega` (± `d_omega`) and `tg` (± `rel_tg`·`tg`).
    pub fn around(omega: f64, d_omega: f64, tg: f64, rel_tg: f64, amplitude: AmplitudeRule, seed: u64) -> Self {
        Self {
            omega_interval: (omega - d_omega, omega + d_omega),
            tg_interval: (tg * (1.0 - rel_tg), tg * (1.0 + rel_tg)),
            budget: 60,
            initial_points: 10,
            acquisition: Acquisition::ExpectedImprovement,
            kernel: Kernel::Matern52,
            seed,
            amplitude,
            knot_rate: DEFAULT_KNOT_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && b > a;
        if !ok(self.omega_interval) || !ok(self.tg_interval) {
            return Err(invalid("calibration intervals must be nonempty"));
        }
        if self.omega_interval.0 <= 0.0 || self.tg_interval.0 <= 2.0 * DEFAULT_RISE_TIME {
            return Err(invalid("calibration intervals must be physical"));
        }
        if self.budget < 10 || self.initial_points < 2 || self.initial_points > self.budget {
            return Err(invalid("calibration budget must be at least 10"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub omega: f64,
    pub tg: f64,
    pub x0: f64,
    pub infidelity: f64,
    /// Every evaluated `(ω, T_g, infidelity)` in order.
    pub evaluations: Vec<(f64, f64, f64)>,
}

/// Minimizes `f` over `[0,1]²` within `budget` evaluations. Returns the
/// normalized points and values in evaluation order.
pub fn bayes_minimize(
    mut f: impl FnMut(f64, f64) -> Result<f64>,
    budget: usize,
    initial_points: usize,
    seed: u64,
) -> Result<Vec<([f64; 2], f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<([f64; 2], f64)> = Vec::with_capacity(budget);
    for x in latin_hypercube(initial_points.min(budget), &mut rng) {
        let y = f(x[0], x[1])?;
        data.push((x, y));
    }
    while data.len() < budget {
        let gp = Gp::fit(&data)?;
        let next = maximize_ei(&gp, &data, &mut rng);
        let y = f(next[0], next[1])?;
        data.push((next, y));
    }
    Ok(data)
}

fn latin_hypercube(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    (0..n)
        .map(|i| {
            let a = (i as f64 + rng.random::<f64>()) / n as f64;
            let b = (perm[i] as f64 + rng.random::<f64>()) / n as f64;
            [a, b]
        })
        .collect()
}

fn matern52(a: &[f64; 2], b: &[f64; 2], ell: [f64; 2]) -> f64 {
    let r = (((a[0] - b[0]) / ell[0]).powi(2) + ((a[1] - b[1]) / ell[1]).powi(2)).sqrt();
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Zero-mean GP on standardized targets with profiled signal variance.
struct Gp {
    xs: Vec<[f64; 2]>,
    ell: [f64; 2],
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
    mean: f64,
    scale: f64,
    signal: f64,
}

impl Gp {
    fn fit(data: &[([f64; 2], f64)]) -> Result<Self> {
        let n = data.len();
        let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(n, ys.iter().map(|v| (v - mean) / scale));
        let xs: Vec<[f64; 2]> = data.iter().map(|d| d.0).collect();
        let mut best: Option<(f64, Gp)> = None;
        for &l0 in &LENGTH_GRID {
            for &l1 in &LENGTH_GRID {
                let ell = [l0, l1];
                let k = DMatrix::from_fn(n, n, |i, j| matern52(&xs[i], &xs[j], ell) + if i == j { NUGGET } else { 0.0 });
                let Some(chol) = k.cholesky() else { continue };
                let alpha = chol.solve(&y);
                let quad = y.dot(&alpha);
                let signal = (quad / n as f64).max(1e-12);
                let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
                // Profile log-likelihood up to constants.
                let ll = -0.5 * n as f64 * signal.ln() - 0.5 * logdet;
                if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                    let gp = Gp { xs: xs.clone(), ell, chol, alpha, mean, scale, signal };
                    best = Some((ll, gp));
                }
            }
        }
        best.map(|b| b.1).ok_or_else(|| Error::Numerical("GP covariance not positive definite".into()))
    }

    /// Posterior mean and std of the standardized objective.
    fn predict(&self, x: &[f64; 2]) -> (f64, f64) {
        let k = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| matern52(x, xi, self.ell)));
        let mu = k.dot(&self.alpha);
        let v = self.chol.solve(&k);
        let var = self.signal * (1.0 + NUGGET - k.dot(&v)).max(0.0);
        (mu, var.sqrt())
    }
}

fn expected_improvement(gp: &Gp, best: f64, x: &[f64; 2]) -> f64 {
    let (mu, sd) = gp.predict(x);
    let imp = best - mu;
    if sd < 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    let n = Normal::standard();
    imp * n.cdf(z) + sd * n.pdf(z)
}

fn maximize_ei(gp: &Gp, data: &[([f64; 2], f64)], rng: &mut ChaCha8Rng) -> [f64; 2] {
    let best = data.iter().map(|d| (d.1 - gp.mean) / gp.scale).fold(f64::INFINITY, f64::min);
    let mut scored: Vec<([f64; 2], f64)> = (0..CANDIDATES)
        .map(|_| {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            (x, expected_improvement(gp, best, &x))
        })
        .collect();
    // Also probe around the incumbent.
    let incumbent = data.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|d| d.0).unwrap_or([0.5, 0.5]);
    for _ in 0..200 {
        let x = [
            (incumbent[0] + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0),
            (incumbent[1] + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0),
        ];
        scored.push((x, expected_improvement(gp, best, &x)));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut winner = scored[0];
    for start in scored.iter().take(5) {
        let refined = pattern_search(start.0, start.1, |x| expected_improvement(gp, best, x));
        if refined.1 > winner.1 {
            winner = refined;
        }
    }
    let too_close = |x: &[f64; 2]| data.iter().any(|d| (d.0[0] - x[0]).abs() < 1e-9 && (d.0[1] - x[1]).abs() < 1e-9);
    if too_close(&winner.0) {
        return scored.iter().map(|s| s.0).find(|x| !too_close(x)).unwrap_or([rng.random(), rng.random()]);
    }
    winner.0
}

fn pattern_search(mut x: [f64; 2], mut fx: f64, f: impl Fn(&[f64; 2]) -> f64) -> ([f64; 2], f64) {
    let mut h = 0.02;
    while h > 1e-5 {
        let mut improved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let y = [(x[0] + dx).clamp(0.0, 1.0), (x[1] + dy).clamp(0.0, 1.0)];
            let fy = f(&y);
            if fy > fx {
                x = y;
                fx = fy;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Calibrates `(ω, T_g)` of a shaped sinusoid on `device`, minimizing
/// `log10(infidelity + 1e-8)` with a GP surrogate.
pub fn bayesian_calibrate(cfg: &CalibrationConfig, device: &Device, p: &SimParams) -> Result<CalibrationResult> {
    cfg.validate()?;
    let (w0, w1) = cfg.omega_interval;
    let (t0, t1) = cfg.tg_interval;
    let amp = |tg: f64| match cfg.amplitude {
        AmplitudeRule::Fixed(x0) => Ok(x0),
        AmplitudeRule::Analytical => analytical_amplitude(p, tg),
    };
    let mut evals = Vec::with_capacity(cfg.budget);
    let mut objective = |u: f64, v: f64| -> Result<f64> {
        let omega = w0 + u * (w1 - w0);
        let tg = t0 + v * (t1 - t0);
        let spec = TrajectorySpec::new(amp(tg)?, omega, tg);
        let controls = sinusoid_controls(&spec, cfg.knot_rate)?;
        let target = GateTarget::y_pi(p, tg)?;
        let inf = evaluate_trajectory(&controls, device, p, &target)?.infidelity;
        evals.push((omega, tg, inf));
        Ok((inf.max(0.0) + NOISE_FLOOR).log10())
    };
    bayes_minimize(&mut objective, cfg.budget, cfg.initial_points, cfg.seed)?;
    let (omega, tg, infidelity) = evals
        .iter()
        .copied()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("budget is at least 10");
    Ok(CalibrationResult { omega, tg, x0: amp(tg)?, infidelity, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_located() {
        let (cx, cy) = (0.63, 0.27);
        let data = bayes_minimize(|x, y| Ok((x - cx).powi(2) + 2.0 * (y - cy).powi(2)), 30, 10, 7).unwrap();
        let best = data.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((best.0[0] - cx).abs() < 0.01 && (best.0[1] - cy).abs() < 0.01, "{best:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |x: f64, y: f64| Ok((3.0 * x).sin() + (y - 0.4).powi(2));
        let a = bayes_minimize(f, 15, 10, 3).unwrap();
        let b = bayes_minimize(f, 15, 10, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn latin_hypercube_strata() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = latin_hypercube(10, &mut rng);
        for d in 0..2 {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 10.0) as usize).collect();
            bins.sort();
            assert_eq!(bins, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rejects_degenerate_interval() {
        let mut cfg = CalibrationConfig::around(0.56, 0.005, 18.0, 0.25, AmplitudeRule::Fixed(10.0), 0);
        cfg.omega_interval = (0.56, 0.56);
        assert!(cfg.validate().is_err());
    }
}
