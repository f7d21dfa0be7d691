//! Reference propagation through the exact exponential of the 16×16
//! Liouvillian. Slow; used only to validate the split-step kernel.

use nalgebra::SMatrix;

use crate::error::Result;
use crate::landscape::Device;
use crate::linalg::{c, identity2, kron, sigma_z, C64, M4};
use crate::model::{hamiltonian_from, jump_operator_for_phase};
use crate::params::{DissipatorForm, SimParams};

use super::DensityMatrix;

type M16 = SMatrix<C64, 16, 16>;

/// `a ⊗ b` acting on column-stacked vectors: `vec(B X Aᵀ) = (A ⊗ B) vec(X)`.
fn kron16(a: &M4, b: &M4) -> M16 {
    let mut out = M16::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    out[(4 * i + k, 4 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn dissipator_super(l: &M4, form: DissipatorForm) -> M16 {
    let id = M4::identity();
    let a = match form {
        DissipatorForm::Standard => l.adjoint() * l,
        DissipatorForm::ReversedProduct => l * l.adjoint(),
    };
    kron16(&l.conjugate(), l) - (kron16(&id, &a) + kron16(&a.transpose(), &id)) * c(0.5, 0.0)
}

/// Exact Liouvillian step `e^{𝓛 dt} ρ` at displacement `x`.
pub fn dense_oracle_step(
    rho: &DensityMatrix,
    x: f64,
    dt: f64,
    device: &Device,
    p: &SimParams,
) -> Result<DensityMatrix> {
    let s = device.coupling(x)?;
    let h = hamiltonian_from(x, &s, p);
    let id = M4::identity();
    let mut gen = (kron16(&id, &h) - kron16(&h.transpose(), &id)) * c(0.0, -1.0 / p.constants.hbar);
    let g1 = p.valley_rate();
    if g1 > 0.0 {
        let l = kron(&jump_operator_for_phase(s.phase(), p.dissipator.jump), &identity2());
        gen += dissipator_super(&l, p.dissipator.form) * c(g1, 0.0);
    }
    let g2 = p.dephasing_rate();
    if g2 > 0.0 {
        let l = kron(&identity2(), &sigma_z());
        gen += dissipator_super(&l, DissipatorForm::Standard) * c(g2, 0.0);
    }
    let prop = (gen * c(dt, 0.0)).exp();
    let m = rho.matrix();
    let v = SMatrix::<C64, 16, 1>::from_iterator(m.iter().copied());
    let out = prop * v;
    Ok(DensityMatrix::new_unchecked(M4::from_iterator(out.iter().copied())))
}
