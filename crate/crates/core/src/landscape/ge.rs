use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LandscapeProfile, ModelTag};
use crate::error::{invalid, Result};

/// Ge-diffusion valley model: Δ_real and Δ_imag are independent stationary
/// Gaussian fields, so E_V = 2|Δ| is Rayleigh distributed at every position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeDiffusionConfig {
    /// Device length (nm).
    pub length: f64,
    /// Length ℓ of the correlation `exp(−r²/2ℓ²)` (nm).
    pub correlation_length: f64,
    /// Ensemble mean of E_V (meV).
    pub mean_splitting: f64,
    pub grid_spacing: f64,
}

impl Default for GeDiffusionConfig {
    fn default() -> Self {
        Self {
            length: 200.0,
            correlation_length: 20.0,
            mean_splitting: 0.088,
            grid_spacing: 0.1,
        }
    }
}

impl GeDiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_spacing > 0.0 && self.length > self.grid_spacing) {
            return Err(invalid("ge-diffusion: need 0 < grid_spacing < length"));
        }
        if !(self.correlation_length > self.grid_spacing) {
            return Err(invalid("ge-diffusion: correlation_length must exceed grid_spacing"));
        }
        if !(self.mean_splitting > 0.0) {
            return Err(invalid("ge-diffusion: mean_splitting must be positive"));
        }
        Ok(())
    }

    /// Per-component standard deviation σ with `E[2|Δ|] = 2σ√(π/2)`.
    pub fn component_std(&self) -> f64 {
        self.mean_splitting / (2.0 * (std::f64::consts::PI / 2.0).sqrt())
    }
}

pub fn generate_ge_diffusion(cfg: &GeDiffusionConfig, seed: u64) -> Result<LandscapeProfile> {
    cfg.validate()?;
    let h = cfg.grid_spacing;
    let n = (cfg.length / h).round() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = cfg.component_std();
    let delta_re = gaussian_field(n, h, cfg.correlation_length, sigma, &mut rng);
    let delta_im = gaussian_field(n, h, cfg.correlation_length, sigma, &mut rng);
    LandscapeProfile::new(
        0.0,
        h,
        delta_re,
        delta_im,
        ModelTag::GeDiffusion,
        seed,
        serde_json::json!({ "model": "ge-diffusion", "ge_diffusion": cfg }),
    )
}

/// White noise smoothed by `exp(−r²/ℓ²)`, whose self-convolution gives the
/// correlation `exp(−r²/2ℓ²)`; scaled to standard deviation `sigma`.
pub(crate) fn gaussian_field(n: usize, h: f64, ell: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let half = (4.0 * ell / h).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let r = (k as f64 - half as f64) * h;
            (-(r * r) / (ell * ell)).exp()
        })
        .collect();
    let norm = sigma / kernel.iter().map(|k| k * k).sum::<f64>().sqrt();
    let noise: Vec<f64> = (0..n + 2 * half).map(|_| StandardNormal.sample(rng)).collect();
    (0..n)
        .map(|i| {
            let window = &noise[i..i + 2 * half + 1];
            norm * window.iter().zip(&kernel).map(|(w, k)| w * k).sum::<f64>()
        })
        .collect()
}
