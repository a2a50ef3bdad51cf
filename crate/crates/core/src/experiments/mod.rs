//! Deletion-capacity experiments: configurable sweeps over (n, d, m, ε)
//! grids, scaling-law fits that recover the hidden constant and exponents of
//! the risk bound, a held-out capacity-contract check, and the command-line
//! interface that drives the whole toolkit.

mod cli;
pub mod config;
pub mod fit;
pub mod sweep;

pub use cli::cli_dispatch;
pub use config::SweepConfig;
pub use fit::{
    analyze, capacity_constant_for, fit_capacity_constant, fit_log_slopes, FitReport,
    SlopeEstimates, MIN_FIT_POINTS,
};
pub use sweep::{run_capacity_sweep, SweepResult, SweepRow, SweepSummary};
