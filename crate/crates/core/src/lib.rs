//! Simulation and analysis of two-qubit Bell correlations under selection.
//!
//! The crate has four layers:
//!
//! * [`quantum`] — pure-state vectors for 1–4 qubits, angle-parameterized
//!   projective measurement, Bell-basis measurement, and closed-form joint
//!   outcome distributions.
//! * [`protocols`] — Monte Carlo runners that produce event ensembles:
//!   fixed/random Bell-pair runs, an entanglement-swapping run with three
//!   measurement orderings, a classical post-selection filter, and a
//!   classical posterior sorter. All runners derive every trial's random
//!   stream from `(master_seed, trial)` alone, so results are independent
//!   of execution order and worker count.
//! * [`stats`] — contingency tables over ensembles, correlation and CHSH
//!   estimators, factorizability deviations, screening-off summaries, and
//!   comparisons against closed-form references.
//! * [`gallery`] — self-contained classical selection-bias generators
//!   (survivorship, a coin factory, a clinic admission model, and digit
//!   parity streams including exact π/e digits).
//!
//! The crate is `no_std`-compatible with `alloc`: disable default features
//! and enable `libm`. The `parallel` feature adds a rayon-backed runner
//! that produces byte-identical ensembles to the serial one.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("bellbias-core needs either the `std` or the `libm` feature");

pub(crate) mod math;
pub mod rng;

pub mod gallery;
pub mod protocols;
pub mod quantum;
pub mod stats;

pub use protocols::{Ensemble, EventRecord, Geometry, ProtocolConfig, SettingStrategy};
pub use quantum::{BellLabel, MeasAngle, Outcome, PureState};
