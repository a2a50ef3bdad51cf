//! Differentially private learning with certified deletion.
//!
//! The crate is organized around a single pipeline:
//!
//! 1. [`accountant`] — zero-concentrated DP (zCDP) budgeting, conversions to
//!    (ε, δ)-DP, group privacy, sequential composition, and closed-form
//!    deletion-capacity bounds.
//! 2. [`hardinstance`] — scaled-hypercube datasets whose one-way marginal is
//!    the statistic of interest, together with the padding / replication /
//!    rescaling reductions that transfer lower bounds between regimes.
//! 3. [`trainer`] — noisy projected full-batch gradient descent and a
//!    Gaussian mean-release mechanism, both calibrated in zCDP.
//! 4. [`unlearning`] — learners with deletion certificates, the lazy
//!    ("do nothing, the noise already paid for it") unlearning map, retrain
//!    baselines, and chained-deletion budget tracking.
//! 5. [`audit`] — black-box ε estimation from mechanism outputs (histogram
//!    and Gaussian moment-fit estimators) with bootstrap confidence
//!    intervals, plus the analytic Gaussian-mechanism curve for calibration.
//! 6. [`experiments`] — deletion-capacity sweeps, scaling-law fits, and the
//!    command-line interface.

pub mod accountant;
pub mod audit;
pub mod error;
pub mod experiments;
pub mod hardinstance;
pub mod numeric;
pub mod trainer;
pub mod unlearning;

pub use error::{Error, Result};
