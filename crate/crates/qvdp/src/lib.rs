//! Exact steady state of the quantum van der Pol oscillator.
//!
//! A single bosonic mode with incoherent one-photon pump `g`, one-photon
//! loss `kappa` and two-photon loss `eta` has a closed-form steady state.
//! This crate evaluates those closed forms at thermodynamic-limit scale,
//! cross-validates them against a truncated-Fock-space Liouvillian oracle,
//! and reproduces the dissipative-phase-transition criticality and metrology
//! scaling built on top of them.
//!
//! Module map:
//! - [`specialfn`]: log-domain gamma/hypergeometric evaluators.
//! - [`exactstate`]: photon distribution, factorial moments, Wigner function,
//!   driven `g = 0` branch.
//! - [`asymptotics`]: `eta -> 0` limit formulas per regime.
//! - [`liouville`]: block-diagonalized generator, steady-state oracle,
//!   dissipative gap and asymptotic decay rate.
//! - [`metrology`]: quantum Fisher information and signal-to-noise ratios.
//! - [`scaling`]: sweeps and log-log exponent fits.
//! - [`cli`]: command-line front end and result persistence.

// Validation sites use `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod exactstate;
pub mod liouville;
pub mod metrology;
pub mod scaling;
pub mod specialfn;

pub use exactstate::SystemParams;
