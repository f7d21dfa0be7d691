//! Piecewise-constant Lindblad propagation of the valley⊗spin density matrix.

pub(crate) mod kernel;
mod oracle;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::Device;
use crate::linalg::{eigenvalues_hermitian4, hermiticity_error4, kron, C64, M2, M4};
use crate::model::valley_eigenvector;
use crate::params::SimParams;
use crate::pulse::DiscretizedTrajectory;

pub use oracle::dense_oracle_step;
pub(crate) use kernel::StepKernel;

/// Valley-excitation diagnostic is recorded every this many steps.
pub const DIAGNOSTIC_STRIDE: usize = 100;

/// Validated 4×4 density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "M4", into = "M4")]
pub struct DensityMatrix(M4);

impl DensityMatrix {
    pub fn new(m: M4) -> Result<Self> {
        let herm = hermiticity_error4(&m);
        if !(herm <= 1e-12) {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = m.trace();
        if !((tr.re - 1.0).abs() <= 1e-12 && tr.im.abs() <= 1e-12) {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = eigenvalues_hermitian4(&m)[0];
        if !(min >= -1e-10) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: M4) -> Self {
        Self(m)
    }

    pub fn pure(psi: &nalgebra::Vector4<C64>) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / C64::new(n, 0.0);
        Self::new(v * v.adjoint())
    }

    /// `|v⟩⟨v| ⊗ σ` for a valley vector and a spin density matrix.
    pub fn product(valley: &Vector2<C64>, spin: &M2) -> Result<Self> {
        let v = valley / C64::new(valley.norm(), 0.0);
        Self::new(kron(&(v * v.adjoint()), spin))
    }

    /// Local valley ground state at `device.center` tensored with `spin`.
    pub fn ground_valley(device: &Device, spin: &M2) -> Result<Self> {
        let s = device.coupling(0.0)?;
        if s.magnitude() == 0.0 {
            return Err(Error::DegenerateValley { x: device.center });
        }
        Self::product(&valley_eigenvector(s.phase(), -1.0), spin)
    }

    pub fn matrix(&self) -> &M4 {
        &self.0
    }

    pub fn into_matrix(self) -> M4 {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

impl TryFrom<M4> for DensityMatrix {
    type Error = Error;
    fn try_from(m: M4) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for M4 {
    fn from(d: DensityMatrix) -> M4 {
        d.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub rho_final: DensityMatrix,
    /// Largest recorded local excited-valley population.
    pub valley_excitation_max: f64,
    /// Largest recorded `|Tr ρ − 1|`.
    pub trace_drift: f64,
    pub step_count: usize,
}

/// One step of duration `dt` at displacement `x` from the operating point.
pub fn step(rho: &DensityMatrix, x: f64, dt: f64, device: &Device, p: &SimParams) -> Result<DensityMatrix> {
    DensityMatrix::new(rho.0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step duration {dt}")));
    }
    p.validate()?;
    let k = StepKernel::new(x, device.coupling(x)?, dt, p);
    Ok(DensityMatrix(k.apply(&rho.0)))
}

/// Builds the per-step kernels along a trajectory, calling `visit` in order.
pub(crate) fn for_each_kernel(
    traj: &DiscretizedTrajectory,
    device: &Device,
    p: &SimParams,
    mut visit: impl FnMut(usize, &StepKernel) -> Result<()>,
) -> Result<()> {
    for (i, &x) in traj.positions.iter().enumerate() {
        let k = StepKernel::new(x, device.coupling(x)?, traj.duration(i), p);
        visit(i, &k)?;
    }
    Ok(())
}

fn check_trajectory(traj: &DiscretizedTrajectory, p: &SimParams) -> Result<()> {
    p.validate()?;
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    if (traj.dt - p.dt).abs() > 1e-12 * p.dt {
        return Err(Error::InvalidParameter(format!(
            "trajectory dt {} differs from simulation dt {}",
            traj.dt, p.dt
        )));
    }
    if DiscretizedTrajectory::step_count(traj.tg, traj.dt) != traj.len() {
        return Err(Error::InvalidParameter("trajectory length inconsistent with tg/dt".into()));
    }
    Ok(())
}

/// Propagates each initial state along `traj`. Every state sees the same
/// sequence of step maps, so results equal independent single evolutions
/// bitwise.
pub fn evolve_many(
    rho0: &[DensityMatrix],
    traj: &DiscretizedTrajectory,
    device: &Device,
    p: &SimParams,
) -> Result<Vec<EvolutionResult>> {
    check_trajectory(traj, p)?;
    let mut states: Vec<M4> = rho0.iter().map(|r| r.0).collect();
    let mut exc = vec![0.0f64; states.len()];
    let mut drift = vec![0.0f64; states.len()];
    let n = traj.len();
    for_each_kernel(traj, device, p, |i, k| {
        for s in states.iter_mut() {
            *s = k.apply(s);
        }
        if i % DIAGNOSTIC_STRIDE == 0 || i + 1 == n {
            for (j, s) in states.iter().enumerate() {
                exc[j] = exc[j].max(k.valley_excitation(s));
                let d = (s.trace().re - 1.0).abs();
                if !d.is_finite() {
                    return Err(Error::Numerical(format!("non-finite state at step {i}")));
                }
                drift[j] = drift[j].max(d);
            }
        }
        Ok(())
    })?;
    Ok(states
        .into_iter()
        .zip(exc.into_iter().zip(drift))
        .map(|(m, (e, d))| EvolutionResult {
            rho_final: DensityMatrix(m),
            valley_excitation_max: e,
            trace_drift: d,
            step_count: n,
        })
        .collect())
}

pub fn evolve(
    rho0: &DensityMatrix,
    traj: &DiscretizedTrajectory,
    device: &Device,
    p: &SimParams,
) -> Result<EvolutionResult> {
    Ok(evolve_many(std::slice::from_ref(rho0), traj, device, p)?.remove(0))
}

pub fn evolve_batch(
    rho0: &[DensityMatrix; 4],
    traj: &DiscretizedTrajectory,
    device: &Device,
    p: &SimParams,
) -> Result<[EvolutionResult; 4]> {
    let v = evolve_many(rho0, traj, device, p)?;
    Ok(v.try_into().expect("four results"))
}
