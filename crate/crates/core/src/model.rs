//! Valley⊗spin Hamiltonian and closed-form EDSR / dephasing relations.
//!
//! `H(x) = ½gμ_B B_z 𝟙⊗σ_z + c·x 𝟙⊗σ_x + (Δ_re τ_x + Δ_im τ_y)⊗𝟙 − κ_z τ_n⊗σ_z`
//! with `τ_n = cos φ_V τ_x + sin φ_V τ_y`. Because `H_valley = |Δ| τ_n`, the
//! whole Hamiltonian commutes with `τ_n ⊗ 𝟙` and splits into two 2×2 spin
//! blocks labelled by the local valley eigenvalue `s = ±1`.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{invalid, Error, Result};
use crate::landscape::{CouplingSample, LandscapeProfile};
use crate::linalg::{c, kron, sigma_x, sigma_z, tau_n, tau_perp, identity2, C64, M2, M4, ONE, ZERO};
use crate::params::{JumpMode, SimParams};

/// Hamiltonian at one position, in meV.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianAt {
    pub matrix: M4,
}

pub fn hamiltonian_at(x: f64, landscape: &LandscapeProfile, p: &SimParams) -> Result<HamiltonianAt> {
    let s = landscape.sample(x)?;
    Ok(HamiltonianAt { matrix: hamiltonian_from(x, &s, p) })
}

/// Assembles `H` from the drive position and an already-interpolated coupling.
pub fn hamiltonian_from(drive_x: f64, s: &CouplingSample, p: &SimParams) -> M4 {
    let id = identity2();
    let zeeman = kron(&id, &sigma_z()) * c(p.zeeman_half(), 0.0);
    let rabi = kron(&id, &sigma_x()) * c(p.drive_coefficient() * drive_x, 0.0);
    let valley = kron(&valley_hamiltonian(s), &id);
    let spin_valley = kron(&tau_n(s.phase()), &sigma_z()) * c(-p.kappa_z, 0.0);
    zeeman + rabi + valley + spin_valley
}

/// `dH/dx` for a dot displaced to `x` where the coupling is `s`.
pub fn hamiltonian_derivative(s: &CouplingSample, p: &SimParams) -> M4 {
    let id = identity2();
    let drive = kron(&id, &sigma_x()) * c(p.drive_coefficient(), 0.0);
    let dval = M2::new(ZERO, c(s.d_re, -s.d_im), c(s.d_re, s.d_im), ZERO);
    let dsv = kron(&tau_perp(s.phase()), &sigma_z()) * c(-p.kappa_z * s.d_phase(), 0.0);
    drive + kron(&dval, &id) + dsv
}

/// `Δ_re τ_x + Δ_im τ_y`.
pub fn valley_hamiltonian(s: &CouplingSample) -> M2 {
    M2::new(ZERO, c(s.re, -s.im), c(s.re, s.im), ZERO)
}

pub fn valley_splitting(landscape: &LandscapeProfile, x: f64) -> Result<f64> {
    landscape.valley_splitting(x)
}

pub fn valley_phase(landscape: &LandscapeProfile, x: f64) -> Result<f64> {
    landscape.valley_phase(x)
}

/// Local valley eigenvector with `τ_n` eigenvalue `sign` (−1 is the ground state).
pub fn valley_eigenvector(phi: f64, sign: f64) -> Vector2<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Vector2::new(c(r, 0.0), C64::from_polar(sign * r, phi))
}

/// Normalized (ground, excited) eigenvectors of `H_valley(x)`.
pub fn local_valley_frame(landscape: &LandscapeProfile, x: f64) -> Result<(Vector2<C64>, Vector2<C64>)> {
    let s = landscape.sample(x)?;
    if s.magnitude() == 0.0 {
        return Err(Error::DegenerateValley { x });
    }
    let phi = s.phase();
    Ok((valley_eigenvector(phi, -1.0), valley_eigenvector(phi, 1.0)))
}

/// Valley jump operator for relaxation at valley phase `phi`.
pub fn jump_operator_for_phase(phi: f64, mode: JumpMode) -> M2 {
    let e = C64::from_polar(1.0, phi);
    match mode {
        JumpMode::Hermitian => M2::new(ONE, e.conj(), e, -ONE),
        JumpMode::TrueLowering => {
            let g = valley_eigenvector(phi, -1.0);
            let ex = valley_eigenvector(phi, 1.0);
            g * ex.adjoint()
        }
    }
}

/// `d/dφ` of [`jump_operator_for_phase`].
pub fn jump_operator_phase_derivative(phi: f64, mode: JumpMode) -> M2 {
    let e = C64::from_polar(1.0, phi);
    let i = c(0.0, 1.0);
    match mode {
        JumpMode::Hermitian => M2::new(ZERO, -i * e.conj(), i * e, ZERO),
        JumpMode::TrueLowering => M2::new(ZERO, -i * e.conj(), -i * e, ZERO) * c(0.5, 0.0),
    }
}

pub fn jump_operator_valley(landscape: &LandscapeProfile, x: f64, mode: JumpMode) -> Result<M2> {
    Ok(jump_operator_for_phase(landscape.valley_phase(x)?, mode))
}

/// Larmor frequency `g μ_B B_z / h` (GHz).
pub fn larmor_frequency(p: &SimParams) -> f64 {
    p.constants.g_mu_b() * p.b_z / p.constants.h
}

/// Rabi frequency `g μ_B ∂b⊥ x₀ / h` (GHz, cyclic).
pub fn rabi_frequency(p: &SimParams, x0: f64) -> f64 {
    p.constants.g_mu_b() * p.db_perp * x0 / p.constants.h
}

/// Detuned Rabi frequency `√(δ² + f_Rabi²)`, with δ the drive frequency minus
/// the Larmor frequency. All three quantities are cyclic (GHz).
pub fn generalized_rabi(p: &SimParams, x0: f64, delta: f64) -> f64 {
    delta.hypot(rabi_frequency(p, x0))
}

/// Spin precession frequency in the local valley ground state,
/// `(g μ_B B_z + 2κ_z)/h` (GHz).
pub fn frame_frequency(p: &SimParams) -> f64 {
    (p.constants.g_mu_b() * p.b_z + 2.0 * p.kappa_z) / p.constants.h
}

/// Analytical π-pulse time `π ħ / (g μ_B ∂b⊥ x₀)` (ns).
pub fn analytical_gate_time(p: &SimParams, x0: f64) -> Result<f64> {
    if !(x0 > 0.0) || !(p.db_perp > 0.0) {
        return Err(invalid("analytical gate time needs positive amplitude and gradient"));
    }
    Ok(PI * p.constants.hbar / (p.constants.g_mu_b() * p.db_perp * x0))
}

/// Inverse of [`analytical_gate_time`]: amplitude (nm) for a gate time `tg`.
pub fn analytical_amplitude(p: &SimParams, tg: f64) -> Result<f64> {
    if !(tg > 0.0) || !(p.db_perp > 0.0) {
        return Err(invalid("analytical amplitude needs positive gate time and gradient"));
    }
    Ok(PI * p.constants.hbar / (p.constants.g_mu_b() * p.db_perp * tg))
}

/// Charge-noise-limited `T₂* = 2h√ln2 / (π g μ_B ∂b∥ δx_rms)` (ns).
pub fn t2_star(p: &SimParams) -> Result<f64> {
    if !(p.db_par > 0.0) || !(p.dx_rms > 0.0) {
        return Err(invalid("T2* needs positive longitudinal gradient and displacement"));
    }
    Ok(2.0 * p.constants.h * std::f64::consts::LN_2.sqrt()
        / (PI * p.constants.g_mu_b() * p.db_par * p.dx_rms))
}

/// Spectral decomposition `H = V diag(λ) V†`, built in closed form from the
/// block structure.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum {
    pub values: [f64; 4],
    pub vectors: M4,
}

pub fn spectrum(drive_x: f64, s: &CouplingSample, p: &SimParams) -> Spectrum {
    let mag = s.magnitude();
    let phi = s.phase();
    let a = p.zeeman_half();
    let b = p.drive_coefficient() * drive_x;
    let mut values = [0.0; 4];
    let mut vectors = M4::zeros();
    let mut col = 0;
    for sign in [1.0, -1.0] {
        let v = valley_eigenvector(phi, sign);
        let z = a - sign * p.kappa_z;
        let r = z.hypot(b);
        let theta = b.atan2(z);
        let (sh, ch) = (0.5 * theta).sin_cos();
        // Eigenvectors of z σ_z + b σ_x for eigenvalues +r, −r.
        for (m, u) in [(1.0, [ch, sh]), (-1.0, [-sh, ch])] {
            values[col] = sign * mag + m * r;
            for vi in 0..2 {
                for si in 0..2 {
                    vectors[(2 * vi + si, col)] = v[vi] * u[si];
                }
            }
            col += 1;
        }
    }
    Spectrum { values, vectors }
}

/// Projector onto the local excited valley state, lifted to valley⊗spin.
pub fn excited_valley_projector(phi: f64) -> M4 {
    let e = valley_eigenvector(phi, 1.0);
    kron(&(e * e.adjoint()), &identity2())
}
