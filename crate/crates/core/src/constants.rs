use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bohr magneton in meV/mT (CODATA 2018).
pub const MU_B: f64 = 5.788_381_806_0e-5;
/// Reduced Planck constant in meV·ns.
pub const HBAR: f64 = 6.582_119_569e-4;
/// Planck constant in meV·ns.
pub const H_PLANCK: f64 = 2.0 * PI * HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Landé g-factor.
    pub g: f64,
    pub mu_b: f64,
    pub hbar: f64,
    pub h: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: 2.0,
            mu_b: MU_B,
            hbar: HBAR,
            h: H_PLANCK,
        }
    }
}

impl PhysicalConstants {
    /// g·μ_B in meV/mT.
    pub fn g_mu_b(&self) -> f64 {
        self.g * self.mu_b
    }

    /// Converts an energy in meV to a cyclic frequency in GHz.
    pub fn energy_to_ghz(&self, e: f64) -> f64 {
        e / self.h
    }

    /// Converts an energy in meV to an angular frequency in rad/ns.
    pub fn energy_to_angular(&self, e: f64) -> f64 {
        e / self.hbar
    }

    pub fn is_valid(&self) -> bool {
        [self.g, self.mu_b, self.hbar, self.h]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
            && ((self.h - 2.0 * PI * self.hbar) / self.h).abs() < 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planck_constants_consistent() {
        let c = PhysicalConstants::default();
        assert!(c.is_valid());
        // CODATA h = 4.135667696e-3 meV·ns
        assert!((c.h - 4.135_667_696e-3).abs() / c.h < 1e-9);
    }
}
