//! Simulation and optimal control of shuttling-based EDSR single-qubit gates
//! in Si/SiGe spin qubits.
//!
//! The electron spin is coupled to the two low-lying valley states of the
//! silicon conduction band. Gates are performed by oscillating the quantum
//! dot under a micro-magnet gradient; the combined valley⊗spin density matrix
//! is propagated under a Lindblad master equation with valley relaxation and
//! spin dephasing, and the resulting spin channel is scored by its average
//! gate fidelity.
//!
//! Units are fixed crate-wide: energies in meV, times in ns, positions in nm,
//! magnetic fields in mT, frequencies in GHz (cyclic).

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod fidelity;
pub mod landscape;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod params;
pub mod propagator;
pub mod pulse;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use fidelity::{FidelityReport, GateTarget};
pub use landscape::{Device, LandscapeProfile, ModelTag};
pub use params::{DissipatorForm, DriveScaling, JumpMode, SimParams};
pub use propagator::{DensityMatrix, EvolutionResult};
pub use pulse::{ControlVector, DiscretizedTrajectory, TrajectorySpec};
