//! Quantum gate synthesis by Lyapunov tracking control.
//!
//! The crate integrates the controlled time-evolution operator
//! `i dU/dt = (H₀ + Σ f_n(t) H_n) U` with closed-form feedback fields that make
//! a phase-blind distance to the moving target `exp(−i H₀ (t+τ)) O` decrease
//! monotonically, and checks the outcome with gate fidelity and the Makhlin
//! local invariants.
//!
//! Module map:
//!
//! * [`matrix`]: dense complex matrices, Hermitian eigensolver, unitary
//!   exponentials and polar re-unitarization.
//! * [`operators`]: Pauli matrices, Hadamard/CNOT/rotation targets and the
//!   single-qubit, Ising and Heisenberg free Hamiltonians.
//! * [`control`]: the control law (tracked target, Lyapunov function, fields).
//! * [`propagator`]: RK4 integration with feedback, traces, gate-time search
//!   and random rotation batches.
//! * [`invariants`]: Makhlin invariants and distance to an equivalence class.
//! * [`experiments`] and [`config`]: scenario presets, τ sweeps, equivalence
//!   runs and the key-value configuration format used by the CLI.

pub mod config;
pub mod control;
pub mod error;
pub mod experiments;
pub mod invariants;
pub mod matrix;
pub mod operators;
pub mod propagator;

pub use control::{fidelity, ControlLaw};
pub use error::{Error, Result};
pub use invariants::{makhlin, EquivalenceClass, MakhlinInvariants};
pub use matrix::{ComplexMatrix, SpectralDecomposition};
pub use operators::{ControlSet, HamiltonianKind, HamiltonianSpec, RotationTarget};
pub use propagator::{simulate, SimulationConfig, SimulationTrace};
