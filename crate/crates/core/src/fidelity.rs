//! Spin-channel reconstruction and average gate fidelity in the rotating frame.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::landscape::Device;
use crate::linalg::{c, spin_rotation, trace_valley, C64, M2, ONE, ZERO};
use crate::model::frame_frequency;
use crate::params::SimParams;
use crate::propagator::{evolve_many, DensityMatrix, EvolutionResult};
use crate::pulse::{ControlVector, DiscretizedTrajectory, Interpolation, Upsampler};

/// Target gate: `U = U_R · U_G` with the frame rotation
/// `U_R = exp(−i Ω_R T_g σ_z / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateTarget {
    pub u_g: M2,
    /// Frame precession rate (rad/ns).
    pub omega_r: f64,
    pub tg: f64,
}

impl GateTarget {
    pub fn new(u_g: M2, omega_r: f64, tg: f64) -> Result<Self> {
        let t = Self { u_g, omega_r, tg };
        t.validate()?;
        Ok(t)
    }

    /// π rotation about y in the frame precessing at `(g μ_B B_z + 2κ_z)/ħ`.
    pub fn y_pi(p: &SimParams, tg: f64) -> Result<Self> {
        Self::new(spin_rotation([0.0, 1.0, 0.0], PI), 2.0 * PI * frame_frequency(p), tg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = (self.u_g.adjoint() * self.u_g - M2::identity()).norm();
        if !(err <= 1e-12) {
            return Err(invalid(format!("target gate not unitary (error {err:e})")));
        }
        if !(self.omega_r >= 0.0 && self.omega_r.is_finite()) {
            return Err(invalid("frame rate must be non-negative"));
        }
        if !(self.tg >= 0.0 && self.tg.is_finite()) {
            return Err(invalid("target gate time must be non-negative"));
        }
        Ok(())
    }

    /// Full comparison unitary `U_R · U_G`.
    pub fn unitary(&self) -> M2 {
        counter_rotation(self) * self.u_g
    }
}

/// Free spin precession over the gate, `U_R = exp(−i Ω_R T_g σ_z / 2)`.
/// Comparing against `U_R · U_G` counter-rotates the final state into the frame.
pub fn counter_rotation(target: &GateTarget) -> M2 {
    let a = 0.5 * target.omega_r * target.tg;
    M2::new(C64::from_polar(1.0, -a), ZERO, ZERO, C64::from_polar(1.0, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    #[serde(rename = "F_ent")]
    pub f_ent: f64,
    #[serde(rename = "F_avg")]
    pub f_avg: f64,
    pub infidelity: f64,
    pub valley_excitation_max: f64,
}

/// Spin density matrices `|0⟩, |1⟩, |+⟩, |+i⟩`.
pub fn default_spin_inputs() -> [M2; 4] {
    let h = c(0.5, 0.0);
    let hi = c(0.0, 0.5);
    [
        M2::new(ONE, ZERO, ZERO, ZERO),
        M2::new(ZERO, ZERO, ZERO, ONE),
        M2::new(h, h, h, h),
        M2::new(h, -hi, hi, h),
    ]
}

/// Linear map on 2×2 operators, stored as the images of `|j⟩⟨k|` at index `2j + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChannel {
    pub images: [M2; 4],
}

impl SpinChannel {
    pub fn identity() -> Self {
        let mut images = [M2::zeros(); 4];
        for (jk, m) in images.iter_mut().enumerate() {
            m[(jk / 2, jk % 2)] = ONE;
        }
        Self { images }
    }

    pub fn unitary(u: &M2) -> Self {
        let mut ch = Self::identity();
        for m in ch.images.iter_mut() {
            *m = u * *m * u.adjoint();
        }
        ch
    }

    /// Reconstructs the map from its action on four linearly independent inputs.
    pub fn from_pairs(inputs: &[M2; 4], outputs: &[M2; 4]) -> Result<Self> {
        let coeff = Matrix4::<C64>::from_fn(|i, jk| inputs[i][(jk / 2, jk % 2)]);
        let scale = coeff.norm();
        let inv = coeff.try_inverse().ok_or(Error::SingularReconstruction)?;
        if !(inv.norm() * scale < 1e12) {
            return Err(Error::SingularReconstruction);
        }
        let mut images = [M2::zeros(); 4];
        for (jk, img) in images.iter_mut().enumerate() {
            for (i, out) in outputs.iter().enumerate() {
                *img += out * inv[(jk, i)];
            }
        }
        Ok(Self { images })
    }

    pub fn apply(&self, rho: &M2) -> M2 {
        let mut out = M2::zeros();
        for (jk, img) in self.images.iter().enumerate() {
            out += img * rho[(jk / 2, jk % 2)];
        }
        out
    }

    /// Largest deviation of `Tr E(|j⟩⟨k|)` from `δ_jk`.
    pub fn trace_preservation_error(&self) -> f64 {
        self.images
            .iter()
            .enumerate()
            .map(|(jk, m)| {
                let want = if jk / 2 == jk % 2 { ONE } else { ZERO };
                (m.trace() - want).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Traces out the valley from propagated states and reconstructs the channel.
pub fn spin_channel_from_batch(results: &[EvolutionResult; 4], initial_spin_states: &[M2; 4]) -> Result<SpinChannel> {
    let outs = [0, 1, 2, 3].map(|i| trace_valley(results[i].rho_final.matrix()));
    SpinChannel::from_pairs(initial_spin_states, &outs)
}

/// Entanglement fidelity `¼ Σ_jk ⟨j|U† E(|j⟩⟨k|) U|k⟩` against `U = U_R · U_G`.
pub fn entanglement_fidelity(channel: &SpinChannel, target: &GateTarget) -> f64 {
    let u = target.unitary();
    let mut acc = ZERO;
    for (jk, img) in channel.images.iter().enumerate() {
        let m = u.adjoint() * img * u;
        acc += m[(jk / 2, jk % 2)];
    }
    0.25 * acc.re
}

pub fn average_gate_fidelity(channel: &SpinChannel, target: &GateTarget) -> FidelityReport {
    let f_ent = entanglement_fidelity(channel, target);
    let f_avg = (2.0 * f_ent + 1.0) / 3.0;
    FidelityReport { f_ent, f_avg, infidelity: 1.0 - f_avg, valley_excitation_max: 0.0 }
}

/// Initial states: local valley ground state at the operating point ⊗ each spin input.
pub fn initial_states(device: &Device, spins: &[M2; 4]) -> Result<[DensityMatrix; 4]> {
    Ok([
        DensityMatrix::ground_valley(device, &spins[0])?,
        DensityMatrix::ground_valley(device, &spins[1])?,
        DensityMatrix::ground_valley(device, &spins[2])?,
        DensityMatrix::ground_valley(device, &spins[3])?,
    ])
}

/// Propagates the four tomographic inputs along an already discretized trajectory.
pub fn evaluate_discretized(
    traj: &DiscretizedTrajectory,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
) -> Result<FidelityReport> {
    target.validate()?;
    if (target.tg - traj.tg).abs() > 1e-9 * traj.tg.max(1.0) {
        return Err(invalid(format!("target gate time {} differs from pulse {}", target.tg, traj.tg)));
    }
    let spins = default_spin_inputs();
    let rho0 = initial_states(device, &spins)?;
    let results: [EvolutionResult; 4] = evolve_many(&rho0, traj, device, p)?.try_into().expect("four results");
    let channel = spin_channel_from_batch(&results, &spins)?;
    let mut report = average_gate_fidelity(&channel, target);
    report.valley_excitation_max = results.iter().map(|r| r.valley_excitation_max).fold(0.0, f64::max);
    if !report.f_avg.is_finite() {
        return Err(Error::Numerical("non-finite fidelity".into()));
    }
    Ok(report)
}

/// Upsample → propagate → reconstruct → score.
pub fn evaluate_trajectory(
    controls: &ControlVector,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
) -> Result<FidelityReport> {
    evaluate_trajectory_with(controls, device, p, target, Interpolation::Linear)
}

pub fn evaluate_trajectory_with(
    controls: &ControlVector,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
    mode: Interpolation,
) -> Result<FidelityReport> {
    let traj = Upsampler::new(controls, p.dt, mode)?.apply(&controls.knots);
    evaluate_discretized(&traj, device, p, target)
}

#[cfg(test)]
mod tests;
