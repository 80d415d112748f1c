//! Design and validation of effective counterdiabatic (eCD) quantum control
//! pulses for few-level driven systems.
//!
//! The crate is organized around the workflow:
//!
//! 1. [`operator`]: dense complex matrix primitives (Paulis, ladder operators,
//!    commutators, Hermitian exponentials).
//! 2. [`schedule`] / [`control`]: scalar drive schedules with analytic
//!    derivatives and control Hamiltonians H(x) = Σᵢ cᵢ(x)·Hᵢ.
//! 3. [`spectral`]: gauge-continuous instantaneous eigendecomposition along a
//!    sweep and the exact counterdiabatic field that cancels nonadiabatic
//!    transitions.
//! 4. [`floquet`]: Fourier analysis of periodic control ansätze, the
//!    Floquet-Magnus effective Hamiltonian, micromotion, and closed-form
//!    synthesis of oscillating pulses whose effective Hamiltonian reproduces
//!    the CD field — the eCD construction.
//! 5. [`propagate`]: midpoint-exponential Schrödinger propagation,
//!    stroboscopic analysis, fidelities, and independent oracles
//!    (adiabatic-frame ODE, principal matrix log).
//! 6. [`models`]: the concrete protocols — Landau-Zener sweeps, STIRAP and
//!    fmod-STIRAP, circuit-QED Bell-state preparation, and the fractional-
//!    STIRAP single-qubit gate.

pub mod control;
pub mod error;
pub mod floquet;
pub mod models;
pub mod operator;
pub mod propagate;
pub mod schedule;
pub mod spectral;

pub use control::ControlHamiltonian;
pub use error::{Error, Result};
pub use operator::{
    build_ladder, commutator, expm_i, hs_inner, tensor, CMat, CVec, Operator, OperatorKind,
};
pub use schedule::Schedule;
pub use spectral::{cd_field, cd_field_lz, eigendecompose_continuous, FrameOptions, SpectralFrame};
