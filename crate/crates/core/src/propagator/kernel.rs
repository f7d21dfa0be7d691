//! One piecewise-constant step `D_{h/2} ∘ 𝒰_h ∘ D_{h/2}` and its adjoint.
//!
//! `𝒰_h(ρ) = U ρ U†` with `U = V e^{−iλh/ħ} V†` from the closed-form
//! spectrum. The dissipative map factorizes into a valley superoperator and
//! spin dephasing; the valley part acts identically on every spin block, so
//! it is stored as a 4×4 matrix `S` over valley index pairs `(v,w) → 2v+w`:
//! `D(ρ)[2v+s, 2w+t] = q^{[s≠t]} Σ_ab S[2v+w, 2a+b] ρ[2a+s, 2b+t]`.

use crate::landscape::CouplingSample;
use crate::linalg::{c, identity2, C64, I, M2, M4, ONE, ZERO};
use crate::params::{DissipatorForm, JumpMode, SimParams};

/// Valley jump operator for unit phase `e = e^{iφ}` (see `model::jump_operator_for_phase`).
fn jump(e: C64, mode: JumpMode) -> M2 {
    match mode {
        JumpMode::Hermitian => M2::new(ONE, e.conj(), e, -ONE),
        JumpMode::TrueLowering => M2::new(ONE, e.conj(), -e, -ONE) * c(0.5, 0.0),
    }
}

/// `d/dφ` of [`jump`].
fn jump_derivative(e: C64, mode: JumpMode) -> M2 {
    match mode {
        JumpMode::Hermitian => M2::new(ZERO, -I * e.conj(), I * e, ZERO),
        JumpMode::TrueLowering => M2::new(ZERO, -I * e.conj(), -I * e, ZERO) * c(0.5, 0.0),
    }
}

fn tau_n_of(e: C64) -> M2 {
    M2::new(ZERO, e.conj(), e, ZERO)
}

/// Valley superoperator of `X ↦ A X B†`.
fn sandwich_super(a: &M2, b: &M2) -> M4 {
    M4::from_fn(|vw, ab| a[(vw / 2, ab / 2)] * b[(vw % 2, ab % 2)].conj())
}

/// Valley superoperator of `X ↦ A X + X A`.
fn anti_super(a: &M2) -> M4 {
    let id = identity2();
    M4::from_fn(|vw, ab| {
        let (v, w, x, y) = (vw / 2, vw % 2, ab / 2, ab % 2);
        a[(v, x)] * id[(w, y)] + id[(v, x)] * a[(y, w)]
    })
}

/// Lindblad generator `D[L]` as a valley superoperator.
fn generator_super(l: &M2, a_op: &M2) -> M4 {
    sandwich_super(l, l) - anti_super(a_op) * c(0.5, 0.0)
}

/// Dissipative part of a step for a duration `t`.
#[derive(Debug, Clone)]
pub(crate) struct Dissipator {
    pub valley: M4,
    /// Factor multiplying spin coherences, `e^{−2t/T₂ₛ}`.
    pub coherence: f64,
    /// `e^{iφ_V}` of the local valley frame.
    pub unit: C64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Kraus { k0: M2, k1: M2, c: f64, s: f64 },
    Series { l: M2, gen: M4, a: f64 },
}

impl Dissipator {
    pub fn new(unit: C64, t: f64, p: &SimParams) -> Self {
        let gamma = p.valley_rate();
        let kind = if gamma == 0.0 {
            Kind::Identity
        } else if p.dissipator.is_standard() {
            // Exact amplitude damping: K₀ = P_g + e^{−γt/2} P_e, K₁ = √(1−e^{−γt}) L.
            let cc = (-0.5 * gamma * t).exp();
            let s = (-(-gamma * t).exp_m1()).sqrt();
            let pe = (identity2() + tau_n_of(unit)) * c(0.5, 0.0);
            let k0 = identity2() - pe * c(1.0 - cc, 0.0);
            let k1 = jump(unit, p.dissipator.jump) * c(s, 0.0);
            Kind::Kraus { k0, k1, c: cc, s }
        } else {
            // Second-order series 1 + a𝒟 + a²𝒟²/2.
            let l = jump(unit, p.dissipator.jump);
            let a_op = match p.dissipator.form {
                DissipatorForm::Standard => l.adjoint() * l,
                DissipatorForm::ReversedProduct => l * l.adjoint(),
            };
            let gen = generator_super(&l, &a_op);
            Kind::Series { l, gen, a: gamma * t }
        };
        let valley = match &kind {
            Kind::Identity => M4::identity(),
            Kind::Kraus { k0, k1, .. } => sandwich_super(k0, k0) + sandwich_super(k1, k1),
            Kind::Series { gen, a, .. } => M4::identity() + gen * c(*a, 0.0) + gen * gen * c(0.5 * a * a, 0.0),
        };
        let coherence = (-2.0 * p.dephasing_rate() * t).exp();
        Self { valley, coherence, unit, kind }
    }

    pub fn apply(&self, rho: &M4) -> M4 {
        apply_super(&self.valley, self.coherence, rho)
    }

    /// Heisenberg-picture adjoint.
    pub fn adjoint(&self, lam: &M4) -> M4 {
        apply_super(&self.valley.adjoint(), self.coherence, lam)
    }

    /// `∂S/∂φ`, or `None` when the valley map does not depend on the phase.
    pub fn phase_derivative(&self, p: &SimParams) -> Option<M4> {
        let dl = jump_derivative(self.unit, p.dissipator.jump);
        match &self.kind {
            Kind::Identity => None,
            Kind::Kraus { k0, k1, c: cc, s } => {
                let dk0 = tau_n_of(I * self.unit) * c(0.5 * (cc - 1.0), 0.0);
                let dk1 = dl * c(*s, 0.0);
                Some(sandwich_super(&dk0, k0) + sandwich_super(k0, &dk0) + sandwich_super(&dk1, k1) + sandwich_super(k1, &dk1))
            }
            Kind::Series { l, gen, a, .. } => {
                let da = match p.dissipator.form {
                    DissipatorForm::Standard => dl.adjoint() * l + l.adjoint() * dl,
                    DissipatorForm::ReversedProduct => dl * l.adjoint() + l * dl.adjoint(),
                };
                let dgen = sandwich_super(&dl, l) + sandwich_super(l, &dl) - anti_super(&da) * c(0.5, 0.0);
                Some(dgen * c(*a, 0.0) + (dgen * gen + gen * dgen) * c(0.5 * a * a, 0.0))
            }
        }
    }

    pub fn apply_with(&self, s: &M4, rho: &M4) -> M4 {
        apply_super(s, self.coherence, rho)
    }
}

/// `out[2v+s, 2w+t] = q^{[s≠t]} Σ_ab S[2v+w, 2a+b] ρ[2a+s, 2b+t]`.
#[inline]
pub(crate) fn apply_super(s: &M4, q: f64, rho: &M4) -> M4 {
    let mut out = M4::zeros();
    for sp in 0..2 {
        for tp in 0..2 {
            let blk = [rho[(sp, tp)], rho[(sp, 2 + tp)], rho[(2 + sp, tp)], rho[(2 + sp, 2 + tp)]];
            let f = if sp == tp { 1.0 } else { q };
            for vw in 0..4 {
                let mut acc = ZERO;
                for ab in 0..4 {
                    acc += s[(vw, ab)] * blk[ab];
                }
                out[(2 * (vw / 2) + sp, 2 * (vw % 2) + tp)] = acc * f;
            }
        }
    }
    out
}

/// Everything needed to apply one step to any number of states.
#[derive(Debug, Clone)]
pub(crate) struct StepKernel {
    /// Step duration over ħ (1/meV).
    pub tau: f64,
    pub u: M4,
    pub half: Dissipator,
    pub sample: CouplingSample,
    pub drive_x: f64,
}

impl StepKernel {
    pub fn new(drive_x: f64, sample: CouplingSample, h: f64, p: &SimParams) -> Self {
        let tau = h / p.constants.hbar;
        let unit = sample.unit_phase();
        let u = step_unitary(drive_x, &sample, unit, tau, p);
        let half = Dissipator::new(unit, 0.5 * h, p);
        Self { tau, u, half, sample, drive_x }
    }

    pub fn apply(&self, rho: &M4) -> M4 {
        let a = self.half.apply(rho);
        let b = conjugate_hermitian(&self.u, &a);
        self.half.apply(&b)
    }

    #[cfg(test)]
    pub fn adjoint(&self, lam: &M4) -> M4 {
        let a = self.half.adjoint(lam);
        let b = self.u.adjoint() * a * self.u;
        self.half.adjoint(&b)
    }

    /// Local excited-valley population of `rho`.
    pub fn valley_excitation(&self, rho: &M4) -> f64 {
        excited_population_unit(self.half.unit, rho)
    }
}

/// Spin block `u_s = e^{−is|Δ|τ} [cos(r τ) 𝟙 − i sin(r τ)/r (z σ_z + b σ_x)]`
/// with `z = a − sκ`, `r = √(z² + b²)`; the `U` restricted to `τ_n = s`.
struct SpinBlock {
    u: M2,
    /// `∂u/∂b`.
    du_db: M2,
}

fn spin_block(s: f64, a: f64, b: f64, mag: f64, kappa: f64, tau: f64) -> SpinBlock {
    let z = a - s * kappa;
    let r = z.hypot(b);
    let rt = r * tau;
    let (sn, cs) = rt.sin_cos();
    // k = sin(rτ)/r, g = (dk/dr)/r = (rτ cos rτ − sin rτ)/r³.
    let (k, g) = if rt < 1e-3 {
        let t3 = tau * tau * tau;
        (tau * (1.0 - rt * rt / 6.0), -t3 / 3.0 * (1.0 - rt * rt / 10.0))
    } else {
        (sn / r, (rt * cs - sn) / (r * r * r))
    };
    let ph = C64::from_polar(1.0, -s * mag * tau);
    let u = M2::new(c(cs, -k * z), c(0.0, -k * b), c(0.0, -k * b), c(cs, k * z)) * ph;
    let d0 = -tau * k * b;
    let du = M2::new(c(d0, -g * b * z), c(0.0, -g * b * b - k), c(0.0, -g * b * b - k), c(d0, g * b * z)) * ph;
    SpinBlock { u, du_db: du }
}

/// `P_+ ⊗ m_+ + P_− ⊗ m_−` with `P_± = (𝟙 ± τ_n)/2`.
fn assemble(mp: &M2, mm: &M2, unit: C64) -> M4 {
    let sum = (mp + mm) * c(0.5, 0.0);
    let diff = (mp - mm) * c(0.5, 0.0);
    let tn = tau_n_of(unit);
    let mut out = M4::zeros();
    for v in 0..2 {
        for w in 0..2 {
            let blk = if v == w { sum } else { diff * tn[(v, w)] };
            for s in 0..2 {
                for t in 0..2 {
                    out[(2 * v + s, 2 * w + t)] = blk[(s, t)];
                }
            }
        }
    }
    out
}

fn blocks(drive_x: f64, sample: &CouplingSample, tau: f64, p: &SimParams) -> (SpinBlock, SpinBlock) {
    let a = p.zeeman_half();
    let b = p.drive_coefficient() * drive_x;
    let mag = sample.magnitude();
    (spin_block(1.0, a, b, mag, p.kappa_z, tau), spin_block(-1.0, a, b, mag, p.kappa_z, tau))
}

/// `U = e^{−iHτ}` from the block structure `U = P_+ ⊗ u_+ + P_− ⊗ u_−`.
pub(crate) fn step_unitary(drive_x: f64, sample: &CouplingSample, unit: C64, tau: f64, p: &SimParams) -> M4 {
    let (up, um) = blocks(drive_x, sample, tau, p);
    assemble(&up.u, &um.u, unit)
}

/// `dU/dx` where `x` moves both the drive and the landscape sample.
pub(crate) fn step_unitary_derivative(
    drive_x: f64,
    sample: &CouplingSample,
    unit: C64,
    tau: f64,
    p: &SimParams,
) -> M4 {
    let (up, um) = blocks(drive_x, sample, tau, p);
    let db = p.drive_coefficient();
    let mag = sample.magnitude();
    let dmag = if mag == 0.0 { 0.0 } else { (sample.re * sample.d_re + sample.im * sample.d_im) / mag };
    let dphi = sample.d_phase();
    let dp = up.du_db * c(db, 0.0) + up.u * c(0.0, -tau * dmag);
    let dm = um.du_db * c(db, 0.0) + um.u * c(0.0, tau * dmag);
    let mut out = assemble(&dp, &dm, unit);
    if dphi != 0.0 {
        // dP_± = ±½ φ' ∂τ_n/∂φ, with ∂τ_n/∂φ = τ_n(e^{iφ}·i).
        let dtn = tau_n_of(I * unit);
        let diff = (up.u - um.u) * c(0.5 * dphi, 0.0);
        for v in 0..2 {
            for w in 0..2 {
                if v == w {
                    continue;
                }
                for s in 0..2 {
                    for t in 0..2 {
                        out[(2 * v + s, 2 * w + t)] += diff[(s, t)] * dtn[(v, w)];
                    }
                }
            }
        }
    }
    out
}

/// `U ρ U†` for Hermitian `ρ`, filling the lower triangle by symmetry.
#[inline]
pub(crate) fn conjugate_hermitian(u: &M4, rho: &M4) -> M4 {
    hermitian_product(&(u * rho), u)
}

/// `x w†`, computing only the upper triangle; the product must be Hermitian.
#[inline]
pub(crate) fn hermitian_product(x: &M4, u: &M4) -> M4 {
    let mut out = M4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += x[(i, k)] * u[(j, k)].conj();
            }
            out[(i, j)] = acc;
            if j != i {
                out[(j, i)] = acc.conj();
            }
        }
    }
    out
}

/// `Tr[(P_e ⊗ 𝟙) ρ]` with `P_e = (𝟙 + τ_n)/2`.
#[cfg(test)]
pub(crate) fn excited_population(phi: f64, rho: &M4) -> f64 {
    excited_population_unit(C64::from_polar(1.0, phi), rho)
}

pub(crate) fn excited_population_unit(e: C64, rho: &M4) -> f64 {
    let mut acc = ZERO;
    for s in 0..2 {
        let r00 = rho[(s, s)];
        let r11 = rho[(2 + s, 2 + s)];
        let r10 = rho[(2 + s, s)];
        // ⟨e|ρ_s|e⟩ with |e⟩ = (1, e^{iφ})/√2.
        acc += (r00 + r11 + e.conj() * r10 + e * r10.conj()) * 0.5;
    }
    acc.re
}
