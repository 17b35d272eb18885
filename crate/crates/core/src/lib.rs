//! Time-dependent Dyson maps for non-Hermitian Hamiltonians.
//!
//! The Dyson map is obtained by integrating the Schrödinger-like equation
//! `i ∂t η(t) = η(t) H(t)` on a truncated Fock space. Along such a trajectory
//! the metric `ρ = η†η` stays constant whenever `H†(t)ρ(t₀) = ρ(t₀)H(t)`, and
//! `h(t) = 2 η H η⁻¹` is the Hermitian counterpart of `H(t)`.
//!
//! Modules:
//! - [`fock`]: ladder, displacement and rotation operators, matrix exponential,
//!   linear solves and truncation metrics.
//! - [`propagation`]: RK4 integration of the Dyson map, of states, and of the
//!   unitary (Hermitian) variant; metric and counterpart trajectories.
//! - [`oscillator`]: the driven oscillator `ω a†a + κ(α a + β a†)` and its
//!   Lewis–Riesenfeld solution.
//! - [`diagnostics`]: named residuals with pass/fail classification.
//! - [`library`]: the bundled named scenarios.

pub mod diagnostics;
pub mod error;
pub mod fock;
pub mod library;
pub mod oscillator;
pub mod propagation;
pub mod quadrature;

pub use error::{Error, Result};
pub use fock::{FockOperator, StateVector};
pub use num_complex::Complex64 as C64;
