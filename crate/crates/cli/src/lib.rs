//! Standard-library companion to `bellbias-core`: configuration files,
//! CSV/JSON emission, and the `bellbias` command-line tool.
//!
//! The split keeps the simulation and statistics layers free of IO so
//! they stay `no_std`-capable; everything here is plumbing around them.
//! Exposed as a library so the integration tests can drive the exact
//! code paths the binary uses.

pub mod combos;
pub mod config;
pub mod emit;
pub mod oracle;
pub mod reports;
pub mod runner;

/// Exit code for configuration or IO problems.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for an acceptance-gate failure under `--gates`.
pub const EXIT_GATES: i32 = 3;
