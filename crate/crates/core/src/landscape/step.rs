use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LandscapeProfile, ModelTag};
use crate::error::{invalid, Result};

/// Step (miscut) valley model: flat terraces of constant Δ separated by
/// atomic steps where the valley phase jumps, smoothed by the dot wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepModelConfig {
    pub length: f64,
    /// Mean distance between steps of the Poisson process (nm).
    pub mean_step_spacing: f64,
    /// Valley phase change across one step (rad).
    pub phase_jump_per_step: f64,
    /// Terrace E_V before jitter (meV); terrace |Δ| is half of it.
    pub base_splitting: f64,
    /// Standard deviation of the Gaussian wavefunction average (nm).
    pub dot_smoothing_width: f64,
    /// Relative standard deviation of the terrace magnitude.
    pub magnitude_jitter: f64,
    pub grid_spacing: f64,
}

impl Default for StepModelConfig {
    fn default() -> Self {
        Self {
            length: 200.0,
            mean_step_spacing: 50.0,
            phase_jump_per_step: 2.577,
            base_splitting: 0.125,
            dot_smoothing_width: 10.0,
            magnitude_jitter: 0.3,
            grid_spacing: 0.1,
        }
    }
}

impl StepModelConfig {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.length,
            self.mean_step_spacing,
            self.phase_jump_per_step,
            self.base_splitting,
            self.dot_smoothing_width,
            self.magnitude_jitter,
            self.grid_spacing,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(invalid("step model: all parameters must be positive"));
        }
        if self.dot_smoothing_width < self.grid_spacing {
            return Err(invalid("step model: dot_smoothing_width must be >= grid_spacing"));
        }
        Ok(())
    }
}

/// Unsmoothed terrace structure of one step-model device.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRealization {
    /// Step positions (nm), sorted; may lie outside `[0, length]` in the padding.
    pub steps: Vec<f64>,
    /// Per-terrace (|Δ|, phase); `terraces.len() == steps.len() + 1`.
    pub terraces: Vec<(f64, f64)>,
    /// Left edge of the simulated (padded) domain.
    pub domain_start: f64,
}

impl StepRealization {
    /// Index of the terrace containing `x`.
    pub fn terrace_index(&self, x: f64) -> usize {
        self.steps.partition_point(|s| *s <= x)
    }

    /// Unsmoothed Δ at `x`.
    pub fn raw(&self, x: f64) -> (f64, f64) {
        let (m, p) = self.terraces[self.terrace_index(x)];
        (m * p.cos(), m * p.sin())
    }
}

pub fn realize_step_model(cfg: &StepModelConfig, seed: u64) -> Result<StepRealization> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = 4.0 * cfg.dot_smoothing_width;
    let domain_start = -pad;
    let domain_end = cfg.length + pad;
    let gaps = Exp::new(1.0 / cfg.mean_step_spacing).map_err(|e| invalid(e.to_string()))?;
    let mut steps = Vec::new();
    let mut x = domain_start + gaps.sample(&mut rng);
    while x < domain_end {
        steps.push(x);
        x += gaps.sample(&mut rng);
    }
    let mut phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let mut terraces = Vec::with_capacity(steps.len() + 1);
    for k in 0..=steps.len() {
        if k > 0 {
            phase += cfg.phase_jump_per_step;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let magnitude = 0.5 * cfg.base_splitting * (1.0 + cfg.magnitude_jitter * z).abs();
        terraces.push((magnitude, phase));
    }
    Ok(StepRealization { steps, terraces, domain_start })
}

pub fn generate_step_model(cfg: &StepModelConfig, seed: u64) -> Result<LandscapeProfile> {
    let real = realize_step_model(cfg, seed)?;
    let h = cfg.grid_spacing;
    let n = (cfg.length / h).round() as usize + 1;
    let half = (4.0 * cfg.dot_smoothing_width / h).ceil() as usize;
    let w = cfg.dot_smoothing_width;
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let r = (k as f64 - half as f64) * h;
            (-(r * r) / (2.0 * w * w)).exp()
        })
        .collect();
    let ksum: f64 = kernel.iter().sum();
    // Raw profile on the padded grid, sampled at grid points.
    let raw: Vec<(f64, f64)> = (0..n + 2 * half)
        .map(|j| real.raw((j as f64 - half as f64) * h))
        .collect();
    let mut delta_re = Vec::with_capacity(n);
    let mut delta_im = Vec::with_capacity(n);
    for i in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, wk) in kernel.iter().enumerate() {
            let (r, m) = raw[i + k];
            re += wk * r;
            im += wk * m;
        }
        delta_re.push(re / ksum);
        delta_im.push(im / ksum);
    }
    LandscapeProfile::new(
        0.0,
        h,
        delta_re,
        delta_im,
        ModelTag::Step,
        seed,
        serde_json::json!({ "model": "step", "step": cfg }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_constant_between_steps_and_winds_per_step() {
        let cfg = StepModelConfig::default();
        for seed in 0..20 {
            let r = realize_step_model(&cfg, seed).unwrap();
            assert_eq!(r.terraces.len(), r.steps.len() + 1);
            // Phase constant inside each terrace: sample a few points per terrace.
            let mut edges = vec![r.domain_start];
            edges.extend(&r.steps);
            edges.push(cfg.length + 4.0 * cfg.dot_smoothing_width);
            for k in 0..edges.len() - 1 {
                let (a, b) = (edges[k], edges[k + 1]);
                let p0 = r.terraces[r.terrace_index(a + 1e-9 * (b - a).max(1e-6))].1;
                for frac in [0.25, 0.5, 0.75] {
                    let x = a + frac * (b - a);
                    assert!((r.terraces[r.terrace_index(x)].1 - p0).abs() < 1e-12);
                }
            }
            let winding = r.terraces.last().unwrap().1 - r.terraces[0].1;
            let expected = r.steps.len() as f64 * cfg.phase_jump_per_step;
            assert!((winding - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn no_steps_gives_constant_splitting() {
        // A mean spacing far beyond the padded domain makes steps vanishingly rare.
        let cfg = StepModelConfig { mean_step_spacing: 1e12, ..Default::default() };
        let r = realize_step_model(&cfg, 3).unwrap();
        assert!(r.steps.is_empty());
        let p = generate_step_model(&cfg, 3).unwrap();
        let expected = 2.0 * r.terraces[0].0;
        for i in (0..p.len()).step_by(97) {
            assert!((p.splitting_at_index(i) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn splitting_dips_at_step_edges() {
        let cfg = StepModelConfig::default();
        let mut checked = 0;
        for seed in 0..30 {
            let r = realize_step_model(&cfg, seed).unwrap();
            let p = generate_step_model(&cfg, seed).unwrap();
            for &s in &r.steps {
                let (l, rr) = (r.terrace_index(s - 1.0), r.terrace_index(s + 1.0));
                // Isolated step well inside the device.
                let isolated = r.steps.iter().all(|t| *t == s || (t - s).abs() > 40.0);
                if s > 40.0 && s < 160.0 && isolated {
                    let edge = p.valley_splitting(s).unwrap();
                    // The phase jump makes the blend at the edge partially cancel.
                    let plateau = r.terraces[l].0 + r.terraces[rr].0;
                    assert!(edge < plateau, "seed {seed}: edge {edge} plateau {plateau}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 5);
    }
}
