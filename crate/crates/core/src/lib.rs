//! Numerical laboratory for autoresonance capture under combined parametric
//! and external chirped excitation.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: right-hand sides of the slow amplitude/phase system, the
//!   Duffing oscillator it is reduced from, and a small non-autonomous
//!   counterexample used to show where linear stability analysis fails.
//! * [`integrator`]: Dormand–Prince 5(4) with dense output and event location.
//! * [`equilibria`]: the phase equation `P(ψ; δ, ν) = δ sin(2ψ+ν) − sin ψ`,
//!   its roots, the bifurcation function and the stability threshold.
//! * [`asymptotics`]: power-series particular solutions and their residuals.
//! * [`stability`]: linearisation, the scaled near-Hamiltonian frame, the
//!   Lyapunov function and the frozen-Hamiltonian frequency law.
//! * [`capture`]: trajectory classification, basin scans, envelope fits and
//!   threshold sweeps.
//! * [`duffing`]: reduction of the Duffing oscillator and envelope comparison.

// NaN-rejecting `!(x > 0.0)` guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod capture;
pub mod duffing;
pub mod equilibria;
mod error;
pub mod integrator;
pub mod model;
pub mod numeric;
pub mod stability;

pub use error::{Error, Result};
