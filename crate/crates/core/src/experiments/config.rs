//! Sweep configuration: a flat key-value TOML file describing the parameter
//! grid, the replication budget, and the verification thresholds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accountant::CapacityRegime;
use crate::audit::MIN_AUDIT_TRIALS;
use crate::error::{Error, Result};

fn default_n() -> Vec<usize> {
    vec![256, 1024]
}

fn default_d() -> Vec<usize> {
    vec![2, 8, 32]
}

fn default_m() -> Vec<usize> {
    vec![0, 1, 2, 4, 8]
}

fn default_epsilon() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_delta() -> f64 {
    1e-5
}

fn default_seeds() -> usize {
    200
}

fn default_base_seed() -> u64 {
    77
}

fn default_kappa() -> f64 {
    1.0
}

fn default_contract_margin() -> f64 {
    0.9
}

fn default_slope_tolerance() -> f64 {
    0.2
}

fn default_stability_tolerance() -> f64 {
    0.25
}

fn default_contract_fraction_min() -> f64 {
    0.9
}

fn default_verify() -> bool {
    true
}

fn default_regime() -> CapacityRegime {
    CapacityRegime::ApproxConvexFloor
}

/// Everything a sweep needs, with defaults matching the standard grid.
/// Serialized as flat TOML; unknown keys are rejected so typos surface
/// instead of silently falling back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dataset sizes. Every nonzero `m` must divide every `n` so the
    /// replicated instance tiles evenly.
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    /// Dimensions.
    #[serde(default = "default_d")]
    pub d: Vec<usize>,
    /// Deletion counts; `m = 0` runs the no-deletion baseline column.
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    /// Privacy budgets ε.
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    /// Shared failure probability δ.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Independent repetitions per grid point.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Root of the deterministic seed tree; two runs with the same config
    /// produce bitwise-identical outputs.
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    /// Signal-level multiplier: the planted marginal norm is
    /// κ · m √(d ln(1/δ)) / (n ε).
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Safety margin applied when turning the fitted risk constant into a
    /// capacity constant (capacity constant = margin / fitted constant).
    #[serde(default = "default_contract_margin")]
    pub contract_margin: f64,
    /// Allowed deviation of each fitted scaling exponent from 1.
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    /// Allowed relative gap between the constants fitted on the two
    /// interleaved half-grids.
    #[serde(default = "default_stability_tolerance")]
    pub stability_tolerance: f64,
    /// Minimum fraction of held-out points whose measured risk must stay
    /// under the capacity contract.
    #[serde(default = "default_contract_fraction_min")]
    pub contract_fraction_min: f64,
    /// When false, skip verification: the sweep still runs and writes its
    /// outputs, but the summary carries no pass/fail verdict.
    #[serde(default = "default_verify")]
    pub verify: bool,
    /// When ≥ 1000, run a distinguishing audit at every deletion point and
    /// record ε̂ per row. 0 disables auditing (the default: audits dominate
    /// the runtime).
    #[serde(default)]
    pub audit_trials: usize,
    /// Capacity regime the sweep instantiates and fits.
    #[serde(default = "default_regime")]
    pub regime: CapacityRegime,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: default_n(),
            d: default_d(),
            m: default_m(),
            epsilon: default_epsilon(),
            delta: default_delta(),
            seeds: default_seeds(),
            base_seed: default_base_seed(),
            kappa: default_kappa(),
            contract_margin: default_contract_margin(),
            slope_tolerance: default_slope_tolerance(),
            stability_tolerance: default_stability_tolerance(),
            contract_fraction_min: default_contract_fraction_min(),
            verify: default_verify(),
            audit_trials: 0,
            regime: default_regime(),
        }
    }
}

impl SweepConfig {
    /// Number of grid points (rows in the output).
    pub fn grid_size(&self) -> usize {
        self.n.len() * self.d.len() * self.m.len() * self.epsilon.len()
    }

    /// Grid points in fixed iteration order: n outermost, then d, m, ε.
    pub fn grid(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut points = Vec::with_capacity(self.grid_size());
        for &n in &self.n {
            for &d in &self.d {
                for &m in &self.m {
                    for &eps in &self.epsilon {
                        points.push((n, d, m, eps));
                    }
                }
            }
        }
        points
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.d.is_empty() || self.m.is_empty() || self.epsilon.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep grid axes must all be nonempty".into(),
            ));
        }
        for &n in &self.n {
            if n < 2 {
                return Err(Error::InvalidParameter(format!(
                    "sweep needs n ≥ 2, got {n}"
                )));
            }
        }
        for &d in &self.d {
            if d < 1 {
                return Err(Error::InvalidParameter(format!(
                    "sweep needs d ≥ 1, got {d}"
                )));
            }
        }
        for &m in &self.m {
            if m == 0 {
                continue;
            }
            for &n in &self.n {
                if n % m != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "deletion count m = {m} must divide every n (n = {n} fails) \
                         so the replicated instance tiles evenly"
                    )));
                }
                if m >= n {
                    return Err(Error::InvalidParameter(format!(
                        "deletion count m = {m} must be smaller than n = {n}"
                    )));
                }
            }
        }
        for &eps in &self.epsilon {
            if !eps.is_finite() || eps <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "sweep needs ε > 0, got {eps}"
                )));
            }
        }
        if !self.delta.is_finite() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs δ in (0, 1), got {}",
                self.delta
            )));
        }
        if self.seeds < 2 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs ≥ 2 seeds per grid point for standard errors, got {}",
                self.seeds
            )));
        }
        if !self.kappa.is_finite() || self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !self.contract_margin.is_finite()
            || self.contract_margin <= 0.0
            || self.contract_margin > 1.0
        {
            return Err(Error::InvalidParameter(format!(
                "contract_margin must lie in (0, 1], got {}",
                self.contract_margin
            )));
        }
        if !self.slope_tolerance.is_finite() || self.slope_tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "slope_tolerance must be positive, got {}",
                self.slope_tolerance
            )));
        }
        if !self.stability_tolerance.is_finite() || self.stability_tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "stability_tolerance must be positive, got {}",
                self.stability_tolerance
            )));
        }
        if !self.contract_fraction_min.is_finite()
            || self.contract_fraction_min <= 0.0
            || self.contract_fraction_min > 1.0
        {
            return Err(Error::InvalidParameter(format!(
                "contract_fraction_min must lie in (0, 1], got {}",
                self.contract_fraction_min
            )));
        }
        if self.audit_trials != 0 && self.audit_trials < MIN_AUDIT_TRIALS {
            return Err(Error::InvalidParameter(format!(
                "audit_trials must be 0 (off) or ≥ {MIN_AUDIT_TRIALS}, got {}",
                self.audit_trials
            )));
        }
        Ok(())
    }

    pub fn write_toml<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let s = toml::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("serializing sweep config: {e}")))?;
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read_toml<P: AsRef<Path>>(path: P) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        let config: SweepConfig =
            toml::from_str(&s).map_err(|e| Error::Parse(format!("reading sweep config: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}
