//! Adjoint-state gradient of the gate infidelity with respect to the knots.
//!
//! The objective `J = 1 − F_avg` is linear in the four final states, so it
//! can be written `J = J₀ + Σ_i Tr(Λ_i ρ_i(T))`. Costates are carried
//! backwards with the adjoint step maps, and each step contributes
//! `Tr(Λ_{n+1} ∂M_n/∂x_n (ρ_n))` to `∂J/∂x_n`. Forward states are
//! checkpointed every [`CHECKPOINT_STRIDE`] steps and recomputed per segment.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::fidelity::{default_spin_inputs, initial_states, GateTarget};
use crate::landscape::Device;
use crate::linalg::{c, hermitian_part4, identity2, kron, trace_valley, C64, M2, M4, ZERO};
use crate::params::SimParams;
use crate::propagator::kernel::{conjugate_hermitian, hermitian_product, step_unitary_derivative};
use crate::propagator::StepKernel;
use crate::pulse::{ControlVector, DiscretizedTrajectory, Interpolation, Upsampler};

pub const CHECKPOINT_STRIDE: usize = 1000;

/// Objective over one device and target, with the knot→step map prebuilt.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub device: Device<'a>,
    pub params: SimParams,
    pub target: GateTarget,
    upsampler: Upsampler,
    spins: [M2; 4],
    /// Coefficients mapping final spin outputs to `F_ent`: `F_ent = ¼ Σ_i Re Tr(O_i W_i)`.
    weights: [M2; 4],
}

impl<'a> Objective<'a> {
    pub fn new(
        controls: &ControlVector,
        device: Device<'a>,
        params: &SimParams,
        target: &GateTarget,
        mode: Interpolation,
    ) -> Result<Self> {
        params.validate()?;
        target.validate()?;
        if (target.tg - controls.tg).abs() > 1e-9 * controls.tg.max(1.0) {
            return Err(Error::InvalidParameter("target and control gate times differ".into()));
        }
        let upsampler = Upsampler::new(controls, params.dt, mode)?;
        let spins = default_spin_inputs();
        let coeff = Matrix4::<C64>::from_fn(|i, jk| spins[i][(jk / 2, jk % 2)]);
        let inv = coeff.try_inverse().ok_or(Error::SingularReconstruction)?;
        let u = target.unitary();
        let mut weights = [M2::zeros(); 4];
        for (i, w) in weights.iter_mut().enumerate() {
            for jk in 0..4 {
                let (j, k) = (jk / 2, jk % 2);
                // U|k⟩⟨j|U†
                let outer = u.column(k) * u.column(j).adjoint();
                *w += outer * inv[(jk, i)];
            }
        }
        Ok(Self { device, params: *params, target: *target, upsampler, spins, weights })
    }

    pub fn upsampler(&self) -> &Upsampler {
        &self.upsampler
    }

    fn kernels_for(&self, traj: &DiscretizedTrajectory, range: std::ops::Range<usize>) -> Result<Vec<StepKernel>> {
        range
            .map(|i| {
                let x = traj.positions[i];
                Ok(StepKernel::new(x, self.device.coupling(x)?, traj.duration(i), &self.params))
            })
            .collect()
    }

    fn infidelity_of(&self, finals: &[M4; 4]) -> f64 {
        let mut f = 0.0;
        for i in 0..4 {
            f += (trace_valley(&finals[i]) * self.weights[i]).trace().re;
        }
        let f_ent = 0.25 * f;
        1.0 - (2.0 * f_ent + 1.0) / 3.0
    }

    /// Infidelity only (single forward pass).
    pub fn value(&self, knots: &[f64]) -> Result<f64> {
        let traj = self.upsampler.apply(knots);
        let mut states = self.initial()?;
        for i in 0..traj.len() {
            let x = traj.positions[i];
            let k = StepKernel::new(x, self.device.coupling(x)?, traj.duration(i), &self.params);
            for s in states.iter_mut() {
                *s = k.apply(s);
            }
        }
        Ok(self.infidelity_of(&states))
    }

    fn initial(&self) -> Result<[M4; 4]> {
        Ok(initial_states(&self.device, &self.spins)?.map(|d| d.into_matrix()))
    }

    /// Infidelity and `∂J/∂x_n` per propagation step.
    pub fn value_and_step_gradient(&self, knots: &[f64]) -> Result<(f64, Vec<f64>)> {
        let traj = self.upsampler.apply(knots);
        let n = traj.len();
        let mut checkpoints: Vec<[M4; 4]> = Vec::with_capacity(n / CHECKPOINT_STRIDE + 1);
        let mut states = self.initial()?;
        for seg_start in (0..n).step_by(CHECKPOINT_STRIDE) {
            checkpoints.push(states);
            let seg_end = (seg_start + CHECKPOINT_STRIDE).min(n);
            for k in self.kernels_for(&traj, seg_start..seg_end)? {
                for s in states.iter_mut() {
                    *s = k.apply(s);
                }
            }
        }
        let value = self.infidelity_of(&states);

        // J = const − (1/6) Σ_i Re Tr(ρ_i (𝟙⊗W_i)).
        let mut lam: [M4; 4] = [0, 1, 2, 3].map(|i| hermitian_part4(&kron(&identity2(), &self.weights[i])) * c(-1.0 / 6.0, 0.0));

        let mut grad = vec![0.0; n];
        for (seg, cp) in checkpoints.iter().enumerate().rev() {
            let seg_start = seg * CHECKPOINT_STRIDE;
            let seg_end = (seg_start + CHECKPOINT_STRIDE).min(n);
            let kernels = self.kernels_for(&traj, seg_start..seg_end)?;
            // Per step and state: (ρ, D(ρ), U D(ρ) U†).
            let mut fwd: Vec<[[M4; 3]; 4]> = Vec::with_capacity(kernels.len());
            let mut s = *cp;
            for k in &kernels {
                let mut rec = [[M4::zeros(); 3]; 4];
                for (r, slot) in s.iter_mut().zip(rec.iter_mut()) {
                    let a = k.half.apply(r);
                    let b = conjugate_hermitian(&k.u, &a);
                    *slot = [*r, a, b];
                    *r = k.half.apply(&b);
                }
                fwd.push(rec);
            }
            for (local, k) in kernels.iter().enumerate().rev() {
                let i = seg_start + local;
                let g = self.step_sensitivity(k, &fwd[local], &mut lam);
                if !g.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite gradient at step {i} (x = {} nm)",
                        traj.positions[i]
                    )));
                }
                grad[i] = g;
            }
        }
        Ok((value, grad))
    }

    /// Returns `Σ_i Tr(Λ_i ∂M/∂x (ρ_i))` and replaces each `Λ_i` by `M†(Λ_i)`.
    fn step_sensitivity(&self, k: &StepKernel, rec: &[[M4; 3]; 4], lam: &mut [M4; 4]) -> f64 {
        let p = &self.params;
        let dphi = k.sample.d_phase();
        let ddiss = if dphi != 0.0 { k.half.phase_derivative(p) } else { None };
        let du = step_unitary_derivative(k.drive_x, &k.sample, k.half.unit, k.tau, p);
        let ud = k.u.adjoint();
        let mut total = 0.0;
        for s in 0..4 {
            let [rho, rho_a, rho_b] = &rec[s];
            let lam_b = k.half.adjoint(&lam[s]);
            let t = ud * lam_b;
            let lam_a = hermitian_product(&t, &ud);
            // 2 Re Tr(Λ_b U' ρ_a U†) = 2 Re Tr(U' · ρ_a U† Λ_b).
            let x = rho_a * t;
            total += 2.0 * trace_product(&du, &x).re;
            if let Some(d) = &ddiss {
                let first = trace_product(&lam[s], &k.half.apply_with(d, rho_b)).re;
                let last = trace_product(&lam_a, &k.half.apply_with(d, rho)).re;
                total += dphi * (first + last);
            }
            lam[s] = k.half.adjoint(&lam_a);
        }
        total
    }

    /// Infidelity and gradient with respect to every knot.
    pub fn value_and_gradient(&self, knots: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, g) = self.value_and_step_gradient(knots)?;
        Ok((v, self.upsampler.apply_transpose(&g)))
    }
}

/// `Tr(A B)`.
fn trace_product(a: &M4, b: &M4) -> C64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Infidelity and adjoint gradient per knot for linear interpolation.
pub fn infidelity_and_gradient(
    controls: &ControlVector,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
) -> Result<(f64, Vec<f64>)> {
    Objective::new(controls, *device, p, target, Interpolation::Linear)?.value_and_gradient(&controls.knots)
}

/// Central finite differences of the infidelity with step `h` (nm).
pub fn finite_difference_gradient(
    controls: &ControlVector,
    device: &Device,
    p: &SimParams,
    target: &GateTarget,
    h: f64,
    knots: &[usize],
) -> Result<Vec<f64>> {
    let obj = Objective::new(controls, *device, p, target, Interpolation::Linear)?;
    let mut work = controls.knots.clone();
    knots
        .iter()
        .map(|&k| {
            let x = work[k];
            work[k] = x + h;
            let fp = obj.value(&work)?;
            work[k] = x - h;
            let fm = obj.value(&work)?;
            work[k] = x;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::CouplingSample;
    use crate::model::{hamiltonian_derivative, spectrum, Spectrum};

    /// `∂U/∂x = V (F ∘ V† H' V) V†` with the divided differences of `e^{−iλτ}`.
    fn unitary_derivative(sp: &Spectrum, tau: f64, dh: &M4) -> M4 {
        let v = &sp.vectors;
        let lam = &sp.values;
        let mut ht = v.adjoint() * dh * v;
        for j in 0..4 {
            for l in 0..4 {
                let d = 0.5 * (lam[j] - lam[l]) * tau;
                let sinc = if d.abs() < 1e-8 { 1.0 - d * d / 6.0 } else { d.sin() / d };
                let f = C64::from_polar(tau * sinc, -0.5 * (lam[j] + lam[l]) * tau) * c(0.0, -1.0);
                ht[(j, l)] *= f;
            }
        }
        v * ht * v.adjoint()
    }

    #[test]
    fn closed_form_derivative_matches_daleckii_krein() {
        let mut p = SimParams::default();
        p.kappa_z = 5e-6;
        for (re, im, dre, dim, x) in [(0.01, 0.02, 1e-3, -2e-3, 4.0), (-0.002, 0.0005, 3e-4, 1e-4, -9.0)] {
            let s = CouplingSample { re, im, d_re: dre, d_im: dim };
            let tau = 8e-4 / p.constants.hbar;
            let want = unitary_derivative(&spectrum(x, &s, &p), tau, &hamiltonian_derivative(&s, &p));
            let got = step_unitary_derivative(x, &s, s.unit_phase(), tau, &p);
            assert!((want - got).norm() < 1e-10 * want.norm(), "{}", (want - got).norm());
        }
    }

    #[test]
    fn adjoint_matches_finite_differences_on_short_pulse() {
        let n = 201;
        let land = crate::landscape::LandscapeProfile::explicit(
            -10.0,
            0.1,
            (0..n).map(|i| 0.01 + 0.004 * (i as f64 * 0.05).sin()).collect(),
            (0..n).map(|i| 0.006 * (i as f64 * 0.031).cos()).collect(),
        )
        .unwrap();
        let dev = Device::new(&land, 0.0).unwrap();
        let mut p = SimParams::default();
        p.kappa_z = 5e-6;
        let tg = 2.0;
        let target = GateTarget::y_pi(&p, tg).unwrap();
        let knots: Vec<f64> = (0..21).map(|i| 6.0 * (i as f64 * 0.7).sin()).collect();
        let cv = ControlVector::from_knots(knots, tg, 10.0).unwrap();
        let (_, g) = infidelity_and_gradient(&cv, &dev, &p, &target).unwrap();
        let fd = finite_difference_gradient(&cv, &dev, &p, &target, 1e-4, &[3, 10, 17]).unwrap();
        for (i, k) in [3, 10, 17].into_iter().enumerate() {
            assert!((g[k] - fd[i]).abs() < 1e-5 * g[k].abs().max(1e-8), "{} vs {}", g[k], fd[i]);
        }
    }
}
