//! Exact-diagonalization simulator for interacting spin systems with an
//! optional stochastic jump channel that randomizes the state inside a
//! narrow energy shell.
//!
//! Units: ħ = 1 and k_B = 1. Energies and frequencies share one unit and
//! times are measured in its inverse.

pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod propagator;
pub mod seed;
pub mod spin_model;
pub mod xjump;

pub use error::{Error, Result};
pub use experiments::{InitialState, PreparedSystem, TimeSeries};
pub use propagator::{eigendecompose, evolve, EigenSystem, EigenbasisOperator, StateVector};
pub use spin_model::{
    build_hamiltonian, CouplingForm, Hamiltonian, HermitianOperator, Observable, Pauli, SpinSystem,
};
pub use xjump::{JumpMechanism, XJumpConfig};
