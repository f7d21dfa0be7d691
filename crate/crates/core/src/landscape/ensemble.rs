use serde::{Deserialize, Serialize};

use super::{generate_ge_diffusion, generate_step_model, GeDiffusionConfig, LandscapeProfile, StepModelConfig};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ValleyModel {
    GeDiffusion(GeDiffusionConfig),
    Step(StepModelConfig),
}

impl ValleyModel {
    pub fn generate(&self, seed: u64) -> Result<LandscapeProfile> {
        match self {
            ValleyModel::GeDiffusion(cfg) => generate_ge_diffusion(cfg, seed),
            ValleyModel::Step(cfg) => generate_step_model(cfg, seed),
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            ValleyModel::GeDiffusion(cfg) => cfg.length,
            ValleyModel::Step(cfg) => cfg.length,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ValleyModel::GeDiffusion(_) => "ge-diffusion",
            ValleyModel::Step(_) => "step",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of device `index` in the ensemble rooted at `base_seed`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Generates `n` devices; device `i` only depends on `derive_seed(base_seed, i)`.
pub fn sample_ensemble(model: &ValleyModel, n: usize, base_seed: u64) -> Result<Vec<LandscapeProfile>> {
    if n == 0 {
        return Err(invalid("ensemble size must be at least 1"));
    }
    (0..n as u64).map(|i| model.generate(derive_seed(base_seed, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_device_matches_direct_generation() {
        let model = ValleyModel::GeDiffusion(GeDiffusionConfig { length: 50.0, ..Default::default() });
        let e = sample_ensemble(&model, 1, 42).unwrap();
        assert_eq!(e[0], model.generate(derive_seed(42, 0)).unwrap());
        assert!(sample_ensemble(&model, 0, 42).is_err());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..1000).map(|i| derive_seed(5, i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1000);
    }
}
