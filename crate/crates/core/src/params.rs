use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Result};

/// Largest propagation step that still resolves valley dynamics (ns).
pub const MAX_DT: f64 = 2e-3;

/// Prefactor convention for the transverse-gradient drive term.
///
/// `Literal` uses `½ g μ_B ∂b⊥ x σ_x`. `RabiMatched` uses `g μ_B ∂b⊥ x σ_x`, for
/// which the rotating-wave Rabi frequency equals `g μ_B ∂b⊥ x₀ / ħ` and the
/// analytical gate time `π ħ / (g μ_B ∂b⊥ x₀)` produces a π rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveScaling {
    Literal,
    #[default]
    RabiMatched,
}

/// Which valley jump operator drives valley relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpMode {
    /// `|ground⟩⟨excited|` in the local valley frame.
    #[default]
    TrueLowering,
    /// The Hermitian matrix `[[1, e^{-iφ}], [e^{iφ}, -1]]`.
    Hermitian,
}

/// Anticommutator term of the dissipator: `L†L` (Lindblad) or `LL†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissipatorForm {
    #[default]
    Standard,
    /// `LL†` in the anticommutator; trace preserving only for normal `L`.
    ReversedProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DissipatorMode {
    pub jump: JumpMode,
    pub form: DissipatorForm,
}

impl DissipatorMode {
    /// True when valley relaxation is the exact amplitude-damping channel.
    pub fn is_standard(&self) -> bool {
        self.jump == JumpMode::TrueLowering && self.form == DissipatorForm::Standard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// External field (mT).
    pub b_z: f64,
    /// Transverse gradient ∂b⊥ (mT/nm).
    pub db_perp: f64,
    /// Longitudinal gradient ∂b∥ (mT/nm).
    pub db_par: f64,
    /// When set, `db_perp` must equal `q * db_par`.
    pub q: Option<f64>,
    /// Spin-valley coupling κ_z (meV).
    pub kappa_z: f64,
    /// Valley relaxation time (ns); `inf` disables relaxation.
    pub t1_v: f64,
    /// Spin dephasing time (ns); `inf` disables dephasing.
    pub t2_s: f64,
    /// RMS charge-noise displacement (nm).
    pub dx_rms: f64,
    /// Propagation step (ns).
    pub dt: f64,
    pub drive: DriveScaling,
    pub dissipator: DissipatorMode,
    pub constants: PhysicalConstants,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            b_z: 20.0,
            db_perp: 0.1,
            db_par: 0.02,
            q: None,
            kappa_z: 1e-6,
            t1_v: 100.0,
            t2_s: 8e4,
            dx_rms: 4e-3,
            dt: 8e-4,
            drive: DriveScaling::default(),
            dissipator: DissipatorMode::default(),
            constants: PhysicalConstants::default(),
        }
    }
}

impl SimParams {
    /// Links the gradients through `db_perp = q * db_par`.
    pub fn with_q_link(mut self, db_par: f64, q: f64) -> Self {
        self.db_par = db_par;
        self.q = Some(q);
        self.db_perp = q * db_par;
        self
    }

    /// Closed system: no valley relaxation, no spin dephasing.
    pub fn closed(mut self) -> Self {
        self.t1_v = f64::INFINITY;
        self.t2_s = f64::INFINITY;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.constants.is_valid() {
            return Err(invalid("physical constants must be positive and consistent"));
        }
        for (name, v) in [("t1_v", self.t1_v), ("t2_s", self.t2_s)] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid(format!("dt must lie in (0, {MAX_DT}] ns, got {}", self.dt)));
        }
        for (name, v) in [
            ("b_z", self.b_z),
            ("db_perp", self.db_perp),
            ("db_par", self.db_par),
            ("kappa_z", self.kappa_z),
            ("dx_rms", self.dx_rms),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if let Some(q) = self.q {
            if !(q > 0.0) {
                return Err(invalid("q must be positive"));
            }
            let want = q * self.db_par;
            if (self.db_perp - want).abs() > 1e-12 * want.abs().max(1e-300) {
                return Err(invalid(format!(
                    "Q-linked mode requires db_perp = q*db_par = {want}, got {}",
                    self.db_perp
                )));
            }
        }
        Ok(())
    }

    /// Valley relaxation rate 1/T₁ᵥ (1/ns).
    pub fn valley_rate(&self) -> f64 {
        rate(self.t1_v)
    }

    /// Spin dephasing rate 1/T₂ₛ (1/ns).
    pub fn dephasing_rate(&self) -> f64 {
        rate(self.t2_s)
    }

    /// Coefficient `c` of the drive term `c · x · 𝟙⊗σ_x` (meV/nm).
    pub fn drive_coefficient(&self) -> f64 {
        let full = self.constants.g_mu_b() * self.db_perp;
        match self.drive {
            DriveScaling::Literal => 0.5 * full,
            DriveScaling::RabiMatched => full,
        }
    }

    /// Zeeman half-splitting `½ g μ_B B_z` (meV).
    pub fn zeeman_half(&self) -> f64 {
        0.5 * self.constants.g_mu_b() * self.b_z
    }
}

fn rate(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        1.0 / t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimParams::default().validate().unwrap();
        SimParams::default().closed().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = SimParams::default();
        p.dt = 5e-3;
        assert!(p.validate().is_err());
        let mut p = SimParams::default();
        p.t1_v = 0.0;
        assert!(p.validate().is_err());
        let mut p = SimParams::default().with_q_link(0.02, 5.0);
        p.validate().unwrap();
        p.db_perp = 0.2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn drive_coefficient_conventions() {
        let mut p = SimParams::default();
        p.drive = DriveScaling::Literal;
        let lit = p.drive_coefficient();
        p.drive = DriveScaling::RabiMatched;
        assert!((p.drive_coefficient() - 2.0 * lit).abs() < 1e-18);
    }
}
