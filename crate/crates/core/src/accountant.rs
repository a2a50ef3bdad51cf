//! Privacy-budget arithmetic.
//!
//! Everything here is a pure function: zero-concentrated DP (zCDP)
//! composition and group privacy, conversion between ρ-zCDP and (ε, δ)-DP,
//! the sequential-chaining and grouposition budgets for repeated unlearning,
//! and closed-form deletion-capacity bounds for the supported loss regimes.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A ρ-zCDP privacy budget. `rho` is finite and nonnegative except for the
/// explicit non-private sentinel (`rho = ∞`), which calibrates to zero noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZcdpBudget {
    rho: f64,
}

impl ZcdpBudget {
    /// A finite budget; rejects negative, NaN, and infinite values (use
    /// [`ZcdpBudget::non_private`] for the sentinel).
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "zCDP rho must be finite and nonnegative, got {rho}"
            )));
        }
        Ok(ZcdpBudget { rho })
    }

    /// The non-private sentinel: unbounded budget, zero calibrated noise.
    pub fn non_private() -> Self {
        ZcdpBudget { rho: f64::INFINITY }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_non_private(&self) -> bool {
        self.rho.is_infinite()
    }
}

/// An (ε, δ)-DP budget with ε ≥ 0 finite and δ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxDpBudget {
    epsilon: f64,
    delta: f64,
}

impl ApproxDpBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        if !delta.is_finite() || !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(ApproxDpBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Which capacity bound to evaluate. Floor/ceiling distinguish the
/// achievable-rate and impossibility directions of the same scaling; they
/// coincide when given equal constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityRegime {
    ApproxConvexFloor,
    ApproxConvexCeiling,
    ApproxStronglyConvex,
    PureConvexFloor,
    PureConvexCeiling,
}

impl CapacityRegime {
    pub const ALL: [CapacityRegime; 5] = [
        CapacityRegime::ApproxConvexFloor,
        CapacityRegime::ApproxConvexCeiling,
        CapacityRegime::ApproxStronglyConvex,
        CapacityRegime::PureConvexFloor,
        CapacityRegime::PureConvexCeiling,
    ];

    pub fn is_pure(&self) -> bool {
        matches!(
            self,
            CapacityRegime::PureConvexFloor | CapacityRegime::PureConvexCeiling
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityRegime::ApproxConvexFloor => "approx-convex-floor",
            CapacityRegime::ApproxConvexCeiling => "approx-convex-ceiling",
            CapacityRegime::ApproxStronglyConvex => "approx-strongly-convex",
            CapacityRegime::PureConvexFloor => "pure-convex-floor",
            CapacityRegime::PureConvexCeiling => "pure-convex-ceiling",
        }
    }
}

impl fmt::Display for CapacityRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CapacityRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        CapacityRegime::ALL
            .iter()
            .find(|r| r.as_str() == norm)
            .copied()
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown capacity regime '{s}' (expected one of: {})",
                    CapacityRegime::ALL.map(|r| r.as_str()).join(", ")
                ))
            })
    }
}

/// Inputs to a deletion-capacity bound: problem size, excess-risk budget α,
/// privacy budget, the hidden constant in front of the rate (default 1,
/// fit empirically by the experiments module), and loss parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityQuery {
    pub regime: CapacityRegime,
    pub n: u64,
    pub d: u64,
    pub alpha: f64,
    pub budget: ApproxDpBudget,
    pub constant: f64,
    pub lipschitz: f64,
    /// Strong-convexity modulus Δ; required by the pure-convex floor bound.
    pub strong_convexity: Option<f64>,
}

impl CapacityQuery {
    pub fn new(regime: CapacityRegime, n: u64, d: u64, alpha: f64, budget: ApproxDpBudget) -> Self {
        CapacityQuery {
            regime,
            n,
            d,
            alpha,
            budget,
            constant: 1.0,
            lipschitz: 1.0,
            strong_convexity: None,
        }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn with_strong_convexity(mut self, delta: f64) -> Self {
        self.strong_convexity = Some(delta);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("capacity query needs n ≥ 1".into()));
        }
        if self.d < 1 {
            return Err(Error::InvalidParameter("capacity query needs d ≥ 1".into()));
        }
        if !self.alpha.is_finite() || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.constant.is_finite() || self.constant <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "constant must be positive, got {}",
                self.constant
            )));
        }
        if !self.lipschitz.is_finite() || self.lipschitz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lipschitz must be positive, got {}",
                self.lipschitz
            )));
        }
        if let Some(sc) = self.strong_convexity {
            if !sc.is_finite() || sc <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "strong_convexity must be positive, got {sc}"
                )));
            }
        }
        Ok(())
    }
}

/// zCDP cost of one Gaussian-mechanism release: ρ = Δ² / (2σ²).
pub fn gaussian_zcdp(sensitivity: f64, sigma: f64) -> Result<ZcdpBudget> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !sensitivity.is_finite() || sensitivity < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be finite and nonnegative, got {sensitivity}"
        )));
    }
    ZcdpBudget::new(sensitivity * sensitivity / (2.0 * sigma * sigma))
}

/// Noise scale achieving a target budget: σ = Δ / √(2ρ). The non-private
/// sentinel calibrates to zero noise.
pub(crate) fn gaussian_sigma(sensitivity: f64, rho: ZcdpBudget) -> Result<f64> {
    if !sensitivity.is_finite() || sensitivity < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be finite and nonnegative, got {sensitivity}"
        )));
    }
    if rho.is_non_private() || sensitivity == 0.0 {
        return Ok(0.0);
    }
    if rho.rho() == 0.0 {
        return Err(Error::InvalidParameter(
            "cannot calibrate positive sensitivity to a zero zCDP budget".into(),
        ));
    }
    Ok(sensitivity / (2.0 * rho.rho()).sqrt())
}

/// Additive sequential composition of zCDP budgets. Any non-private part
/// makes the composition non-private.
pub fn compose_zcdp(budgets: &[ZcdpBudget]) -> ZcdpBudget {
    if budgets.iter().any(ZcdpBudget::is_non_private) {
        return ZcdpBudget::non_private();
    }
    ZcdpBudget {
        rho: budgets.iter().map(|b| b.rho).sum(),
    }
}

/// Group privacy: datasets differing in k entries are covered at k²·ρ.
pub fn group_zcdp(k: u32, budget: ZcdpBudget) -> Result<ZcdpBudget> {
    if k < 1 {
        return Err(Error::InvalidParameter("group size k must be ≥ 1".into()));
    }
    if budget.is_non_private() {
        return Ok(ZcdpBudget::non_private());
    }
    let kf = k as f64;
    ZcdpBudget::new(kf * kf * budget.rho)
}

/// Conversion from ρ-zCDP to (ε, δ)-DP: ε = ρ + 2·√(ρ·ln(1/δ)).
pub fn zcdp_to_dp(budget: ZcdpBudget, delta: f64) -> Result<ApproxDpBudget> {
    if budget.is_non_private() {
        return Err(Error::InvalidParameter(
            "non-private budget has no finite (epsilon, delta) form".into(),
        ));
    }
    if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let rho = budget.rho;
    let log_term = -delta.ln(); // ln(1/δ) ≥ 0
    let epsilon = rho + 2.0 * (rho * log_term).sqrt();
    ApproxDpBudget::new(epsilon, delta)
}

/// Exact inverse of `zcdp_to_dp ∘ group_zcdp`: the ρ such that a group of
/// size m converts to exactly (ε, δ).
///
/// With L = ln(1/δ), the positive root of ε = m²ρ + 2√(m²ρ·L) in √(m²ρ) is
/// √(L+ε) − √L; computed as ε/(√(L+ε) + √L) to avoid cancellation.
pub fn rho_for_target(target: ApproxDpBudget, m: u32) -> Result<ZcdpBudget> {
    if m < 1 {
        return Err(Error::InvalidParameter("group size m must be ≥ 1".into()));
    }
    if target.epsilon <= 0.0 {
        return Err(Error::InvalidParameter(
            "target epsilon must be positive to calibrate a zCDP budget".into(),
        ));
    }
    if target.delta <= 0.0 || target.delta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "target delta must lie in (0, 1), got {}",
            target.delta
        )));
    }
    let eps = target.epsilon;
    let log_term = -target.delta.ln();
    let s = eps / ((log_term + eps).sqrt() + log_term.sqrt());
    let s_over_m = s / m as f64;
    ZcdpBudget::new(s_over_m * s_over_m)
}

/// Budget after k sequential unlearning steps, each (ε, δ):
/// (k·ε, δ·(e^{kε} − 1)/(e^ε − 1)), with the ε → 0 limit δ′ = k·δ.
/// The output δ is clamped to 1 (it is a probability bound).
pub fn chain_budget(k: u32, per_step: ApproxDpBudget) -> Result<ApproxDpBudget> {
    if k < 1 {
        return Err(Error::InvalidParameter("chain length k must be ≥ 1".into()));
    }
    let kf = k as f64;
    let eps = per_step.epsilon;
    let delta = per_step.delta;
    let delta_out = if delta == 0.0 {
        0.0
    } else if eps == 0.0 {
        (kf * delta).min(1.0)
    } else {
        (delta * ((kf * eps).exp_m1() / eps.exp_m1())).min(1.0)
    };
    ApproxDpBudget::new(kf * eps, delta_out)
}

/// Budget after merging k parallel unlearning runs (grouposition):
/// ε′ = kε²/2 + ε√(2k·ln(1/δ′)), δ_out = δ′ + kδ (clamped to 1).
pub fn grouposition_budget(
    k: u32,
    per_alg: ApproxDpBudget,
    delta_prime: f64,
) -> Result<ApproxDpBudget> {
    if k < 1 {
        return Err(Error::InvalidParameter("group count k must be ≥ 1".into()));
    }
    if !delta_prime.is_finite() || delta_prime <= 0.0 || delta_prime >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta_prime must lie in (0, 1), got {delta_prime}"
        )));
    }
    let kf = k as f64;
    let eps = per_alg.epsilon;
    let eps_out = kf * eps * eps / 2.0 + eps * (2.0 * kf * (-delta_prime.ln())).sqrt();
    let delta_out = (delta_prime + kf * per_alg.delta).min(1.0);
    ApproxDpBudget::new(eps_out, delta_out)
}

/// Closed-form deletion capacity clamp(⌊C · rate(regime)⌋, 0, n), where the
/// rate is the regime's scaling in (n, d, ε, δ, α) and loss parameters.
pub fn deletion_capacity(query: &CapacityQuery) -> Result<u64> {
    query.validate()?;
    if query.alpha == 0.0 {
        // Zero excess-risk tolerance admits no deletions in any regime.
        return Ok(0);
    }
    let eps = query.budget.epsilon();
    let delta = query.budget.delta();
    if query.regime.is_pure() && delta > 0.0 {
        return Err(Error::RegimeMismatch(format!(
            "regime {} is a pure-DP bound but the budget has delta = {delta} > 0",
            query.regime
        )));
    }
    let n = query.n as f64;
    let d = query.d as f64;
    let alpha = query.alpha;
    // ln(1/δ) via |ln δ|: identical for δ ∈ (0, 1] and avoids the −0.0 at
    // δ = 1 whose square root would flip the rate's sign to −∞.
    let log_term = delta.ln().abs();
    let rate = match query.regime {
        CapacityRegime::ApproxConvexFloor | CapacityRegime::ApproxConvexCeiling => {
            eps * n * alpha / (d * log_term).sqrt()
        }
        CapacityRegime::ApproxStronglyConvex => eps * n * alpha.sqrt() / (d * log_term).sqrt(),
        CapacityRegime::PureConvexFloor => {
            let sc = query.strong_convexity.ok_or_else(|| {
                Error::InvalidParameter(
                    "pure-convex-floor capacity needs a strong_convexity modulus".into(),
                )
            })?;
            eps * n * alpha * alpha * sc / (d * query.lipschitz)
        }
        CapacityRegime::PureConvexCeiling => eps * n * alpha / d,
    };
    let scaled = query.constant * rate;
    // δ = 1 (or ε·n·α overflow) drives the rate to ∞: clamp to n. A 0/0
    // (e.g. ε = 0 with δ = 1) yields NaN and means "no budget": capacity 0.
    if scaled.is_nan() {
        return Ok(0);
    }
    Ok((scaled.floor().max(0.0) as u64).min(query.n))
}
