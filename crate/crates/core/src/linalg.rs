//! Fixed-size complex matrices for the valley⊗spin system.
//!
//! Basis ordering is `{|+k_z⟩, |−k_z⟩} ⊗ {|0⟩, |1⟩}`, i.e. index `2·v + s`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
pub use num_complex::Complex64 as C64;

pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> M2 {
    M2::identity()
}

pub fn sigma_x() -> M2 {
    M2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> M2 {
    M2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> M2 {
    M2::new(ONE, ZERO, ZERO, -ONE)
}

/// `cos φ τ_x + sin φ τ_y`.
pub fn tau_n(phi: f64) -> M2 {
    let e = C64::from_polar(1.0, phi);
    M2::new(ZERO, e.conj(), e, ZERO)
}

/// `d/dφ (cos φ τ_x + sin φ τ_y) = −sin φ τ_x + cos φ τ_y`.
pub fn tau_perp(phi: f64) -> M2 {
    tau_n(phi + std::f64::consts::FRAC_PI_2)
}

/// Kronecker product `a ⊗ b` (valley ⊗ spin).
pub fn kron(a: &M2, b: &M2) -> M4 {
    let mut out = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Traces out the valley factor.
pub fn trace_valley(m: &M4) -> M2 {
    let mut out = M2::zeros();
    for s in 0..2 {
        for t in 0..2 {
            out[(s, t)] = m[(s, t)] + m[(2 + s, 2 + t)];
        }
    }
    out
}

/// Traces out the spin factor.
pub fn trace_spin(m: &M4) -> M2 {
    let mut out = M2::zeros();
    for v in 0..2 {
        for w in 0..2 {
            out[(v, w)] = m[(2 * v, 2 * w)] + m[(2 * v + 1, 2 * w + 1)];
        }
    }
    out
}

/// `Tr(A†B)` for 4×4 matrices.
pub fn inner4(a: &M4, b: &M4) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error4(m: &M4) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            e = e.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    e
}

pub fn hermitian_part4(m: &M4) -> M4 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending.
pub fn eigenvalues_hermitian4(m: &M4) -> [f64; 4] {
    let h = hermitian_part4(m);
    let eig = SymmetricEigen::new(h);
    let mut v = [0.0; 4];
    for (k, x) in eig.eigenvalues.iter().enumerate() {
        v[k] = *x;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Trace distance `½‖A − B‖₁` between Hermitian 4×4 matrices.
pub fn trace_distance4(a: &M4, b: &M4) -> f64 {
    0.5 * eigenvalues_hermitian4(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Trace distance between Hermitian 2×2 matrices.
pub fn trace_distance2(a: &M2, b: &M2) -> f64 {
    let d = a - b;
    // Eigenvalues of a 2×2 Hermitian: t/2 ± sqrt((a-d)²/4 + |b|²)
    let t = (d[(0, 0)].re + d[(1, 1)].re) * 0.5;
    let r = (((d[(0, 0)].re - d[(1, 1)].re) * 0.5).powi(2) + d[(0, 1)].norm_sqr()).sqrt();
    0.5 * ((t + r).abs() + (t - r).abs())
}

/// `exp(−i θ n̂·σ / 2)` for a real unit axis `n̂`.
pub fn spin_rotation(axis: [f64; 3], theta: f64) -> M2 {
    let (s, co) = (0.5 * theta).sin_cos();
    let gen = sigma_x() * c(axis[0], 0.0) + sigma_y() * c(axis[1], 0.0) + sigma_z() * c(axis[2], 0.0);
    identity2() * c(co, 0.0) - gen * c(0.0, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_traces_of_product() {
        let a = M2::new(c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.0));
        let b = M2::new(c(0.6, 0.0), c(0.0, 0.1), c(0.0, -0.1), c(0.4, 0.0));
        let ab = kron(&a, &b);
        assert!((trace_valley(&ab) - b).norm() < 1e-15);
        assert!((trace_spin(&ab) - a).norm() < 1e-15);
    }

    #[test]
    fn tau_perp_is_derivative() {
        let phi = 0.37;
        let h = 1e-6;
        let fd = (tau_n(phi + h) - tau_n(phi - h)) / c(2.0 * h, 0.0);
        assert!((fd - tau_perp(phi)).norm() < 1e-9);
    }

    #[test]
    fn trace_distance_2x2_matches_4x4_embedding() {
        let a = M2::new(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0));
        let b = M2::new(c(1.0, 0.0), ZERO, ZERO, ZERO);
        let p = M2::new(ONE, ZERO, ZERO, ZERO);
        let d2 = trace_distance2(&a, &b);
        let d4 = trace_distance4(&kron(&p, &a), &kron(&p, &b));
        assert!((d2 - d4).abs() < 1e-12);
        assert!((d2 - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
