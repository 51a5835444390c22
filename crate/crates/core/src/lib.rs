//! Simulation and estimation library for repeated indirect position
//! measurements of a particle with quadratic Hamiltonian dynamics.
//!
//! The library has three layers:
//!
//! * classical machinery: phase-space geometry and time-τ symplectic maps
//!   ([`phasespace`]), translation-invariant measurement kernels
//!   ([`instrument`]), the ε→0 limit process producing noisy tracks
//!   ([`classical`]), and the reconstruction of initial conditions from a
//!   track ([`estimators`]);
//! * quantum machinery: the exact Kraus measurement chain with a 1-D grid
//!   wavefunction backend and a d-dimensional Gaussian-state backend that
//!   serve as mutual oracles ([`quantum`]);
//! * a numerical Weyl-quantization calculus over atomic symbols
//!   ([`weylcalc`]).
//!
//! Conventions follow the velocity-scaled momentum picture: momenta are
//! `p/m`, so the mass only enters through `τ/m` (free motion) and `β = B/m`
//! (magnetic field), and the semiclassical parameter ε plays the role of ħ
//! with `[x̂, p̂] = iε`.

pub mod classical;
pub mod error;
pub mod estimators;
pub mod instrument;
pub mod phasespace;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod weylcalc;

pub use error::{Error, Result};
pub use phasespace::{DynamicsSpec, PhasePoint, SymplecticMap};
