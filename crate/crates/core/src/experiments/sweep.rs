//! Deletion-capacity sweep: over a grid of (n, d, m, ε), plant a two-block
//! instance whose marginal norm sits at the predicted privacy floor, run the
//! certified learner, delete the m most-aligned points, lazily unlearn, and
//! measure population excess risk in closed form.
//!
//! The instance at each grid point is built so the noise-to-signal ratio is
//! (almost) constant across the whole grid: the planted marginal norm is
//! t = κ · m √(d ln(1/δ)) / (n ε), which is exactly the privacy term of the
//! risk bound, while the mean-release noise per coordinate is σ ∝ m √d / n.
//! Measured risk then scales linearly in the privacy term, so a through-origin
//! fit recovers the hidden constant and log-log regressions recover unit
//! exponents in m, 1/n, √d, and 1/ε.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accountant::{deletion_capacity, rho_for_target, ApproxDpBudget, CapacityQuery};
use crate::audit::audit_unlearning;
use crate::error::{Error, Result};
use crate::hardinstance::{
    most_aligned_indices, one_way_marginal, population_excess_risk, replicate_dataset,
    two_block_dataset, ProductDistribution,
};
use crate::numeric::{derive_seed, dot, exact_mean, exact_sum, norm2};
use crate::unlearning::{
    learn_with, post_process, unlearn_lazy, DeletionRequest, MeanReleaseLearner, SideInformation,
};

use super::config::SweepConfig;
use super::fit::analyze;

/// One grid point of a sweep. Measured fields are `None` when the point
/// failed; the failure reason is then recorded in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seeds: usize,
    /// zCDP actually spent per release (already scaled for m deletions).
    pub rho: Option<f64>,
    /// Per-coordinate noise scale of the mean release.
    pub sigma: Option<f64>,
    /// Norm of the planted marginal ‖q‖ (the signal level t, up to rounding).
    pub marginal_norm: Option<f64>,
    /// max(m, 1) · √(d ln(1/δ)) / (n ε) — the x-coordinate of the risk fit.
    pub privacy_term: Option<f64>,
    pub mean_excess_risk: Option<f64>,
    pub stderr_excess_risk: Option<f64>,
    pub mean_empirical_excess: Option<f64>,
    pub stderr_empirical_excess: Option<f64>,
    /// Deletions the closed-form calculator (constant 1) would certify if the
    /// measured mean risk were the accuracy target.
    pub capacity_at_measured_risk: Option<u64>,
    /// Distinguishing-audit estimate, when the sweep was configured to audit.
    pub audit_epsilon_hat: Option<f64>,
    /// Empty when the point succeeded.
    pub error: String,
}

/// Aggregate verdict of a sweep. Every field that depends on a fit is
/// optional: small smoke grids cannot support the regressions and leave
/// them empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub failures: usize,
    /// Through-origin constant in risk ≈ C · m √(d ln(1/δ)) / (n ε), fitted
    /// on every successful deletion row.
    pub fitted_constant: Option<f64>,
    pub residual_rms: Option<f64>,
    /// Constants refitted on the two interleaved half-grids.
    pub constant_even: Option<f64>,
    pub constant_odd: Option<f64>,
    /// |even − odd| relative to their mean.
    pub constant_spread: Option<f64>,
    /// Joint log-log regression exponents; each should be ≈ 1.
    pub slope_m: Option<f64>,
    pub slope_inv_n: Option<f64>,
    pub slope_sqrt_d: Option<f64>,
    pub slope_inv_eps: Option<f64>,
    /// Safety-margined constant for the capacity calculator:
    /// contract_margin / fitted_constant (fitted on the even half only).
    pub capacity_constant: Option<f64>,
    /// Fraction of held-out (odd-half) points whose measured risk stays
    /// within the accuracy target implied by the capacity contract.
    pub contract_fraction: Option<f64>,
    pub contract_points: Option<usize>,
    /// `None` when verification was disabled; otherwise whether slopes,
    /// stability, and the contract all landed inside their tolerances.
    pub pass: Option<bool>,
}

/// Full sweep output: the config that produced it, one row per grid point,
/// and the fitted summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepResult {
    /// Rows as CSV with a fixed header, one row per grid point.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Vec<SweepRow>> {
        let mut r = csv::Reader::from_path(path.as_ref())?;
        let mut rows = Vec::new();
        for record in r.deserialize() {
            rows.push(record?);
        }
        Ok(rows)
    }

    pub fn write_summary_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read_summary_json<P: AsRef<Path>>(path: P) -> Result<SweepSummary> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Natural-log of 1/δ (δ validated upstream).
fn log_inv(delta: f64) -> f64 {
    -delta.ln()
}

/// The x-coordinate of the risk fit at one grid point.
pub(super) fn privacy_term(n: usize, d: usize, m_eff: usize, epsilon: f64, delta: f64) -> f64 {
    m_eff as f64 * (d as f64 * log_inv(delta)).sqrt() / (n as f64 * epsilon)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = exact_mean(values.iter().copied(), n);
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = exact_sum(values.iter().map(|&v| {
        let dev = v - mean;
        dev * dev
    }));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Project the released parameters onto the unit sphere (the decision set of
/// the linear loss); the all-zeros release stays at the origin.
fn normalize_params(params: &[f64]) -> Vec<f64> {
    let norm = norm2(params);
    if norm == 0.0 || !norm.is_finite() {
        vec![0.0; params.len()]
    } else {
        params.iter().map(|v| v / norm).collect()
    }
}

fn run_point(
    config: &SweepConfig,
    n: usize,
    d: usize,
    m: usize,
    epsilon: f64,
    point_seed: u64,
) -> Result<SweepRow> {
    let m_eff = m.max(1);
    let target = ApproxDpBudget::new(epsilon, config.delta)?;
    let x = privacy_term(n, d, m_eff, epsilon, config.delta);
    let t = config.kappa * x;
    if t >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "planted signal level t = {t:.3} ≥ 1 at (n={n}, d={d}, m={m}, ε={epsilon}); \
             the instance cannot represent it"
        )));
    }

    // Base block of N = n / m_eff distinct rows; replicating it m_eff times
    // yields n rows whose marginal equals the base marginal bitwise, and
    // makes deleting m copies of one row as damaging as deleting one row of
    // the base instance.
    let base_n = n / m_eff;
    let plus_rows = ((base_n as f64) * (1.0 + t) / 2.0).round() as usize;
    let plus_rows = plus_rows.min(base_n);
    let base = two_block_dataset(base_n, d, plus_rows)?;
    let instance = replicate_dataset(&base, m_eff)?;
    let q = one_way_marginal(&instance)?;
    let q_norm = norm2(&q);

    // Population matched to the instance: independent signs with mean q.
    let sqrt_d = (d as f64).sqrt();
    let bias: Vec<f64> = q.iter().map(|&qj| (1.0 + sqrt_d * qj) / 2.0).collect();
    let dist = ProductDistribution::new(bias)?;

    let rho = rho_for_target(target, m_eff as u32)?;
    let sigma = 2.0 / (n as f64 * (2.0 * rho.rho()).sqrt());

    let learner = MeanReleaseLearner::new();
    let request = if m >= 1 {
        Some(DeletionRequest::new(most_aligned_indices(&instance, m)?))
    } else {
        None
    };

    let mut risks = Vec::with_capacity(config.seeds);
    let mut empirical = Vec::with_capacity(config.seeds);
    for s in 0..config.seeds {
        let seed = derive_seed(point_seed, s as u64);
        let pair = learn_with(&learner, &instance, target, m_eff, t, config.regime, seed)?;
        let (mut model, mut certificate) = post_process(
            |model| {
                let mut out = model.clone();
                out.params = normalize_params(&model.params);
                out
            },
            pair,
        );
        if let Some(request) = &request {
            model = unlearn_lazy(request, &model, &SideInformation, &mut certificate)?;
        }
        risks.push(population_excess_risk(&model.params, &dist)?);
        // Closed-form empirical excess on the full instance: ‖q‖ − ⟨θ, q⟩.
        empirical.push(q_norm - dot(&model.params, &q));
    }

    let (mean_risk, stderr_risk) = mean_and_stderr(&risks);
    let (mean_emp, stderr_emp) = mean_and_stderr(&empirical);

    let capacity = deletion_capacity(&CapacityQuery::new(
        config.regime,
        n as u64,
        d as u64,
        mean_risk.min(1.0),
        target,
    ))
    .ok();

    let audit_epsilon_hat = match (&request, config.audit_trials) {
        (Some(request), trials) if trials > 0 => {
            let report = audit_unlearning(
                &learner,
                &instance,
                request,
                target,
                m_eff,
                trials,
                derive_seed(point_seed, u64::MAX),
            )?;
            Some(report.epsilon_hat)
        }
        _ => None,
    };

    Ok(SweepRow {
        n,
        d,
        m,
        epsilon,
        delta: config.delta,
        seeds: config.seeds,
        rho: Some(rho.rho()),
        sigma: Some(sigma),
        marginal_norm: Some(q_norm),
        privacy_term: Some(x),
        mean_excess_risk: Some(mean_risk),
        stderr_excess_risk: Some(stderr_risk),
        mean_empirical_excess: Some(mean_emp),
        stderr_empirical_excess: Some(stderr_emp),
        capacity_at_measured_risk: capacity,
        audit_epsilon_hat,
        error: String::new(),
    })
}

fn failed_row(
    config: &SweepConfig,
    n: usize,
    d: usize,
    m: usize,
    epsilon: f64,
    e: Error,
) -> SweepRow {
    SweepRow {
        n,
        d,
        m,
        epsilon,
        delta: config.delta,
        seeds: config.seeds,
        rho: None,
        sigma: None,
        marginal_norm: None,
        privacy_term: None,
        mean_excess_risk: None,
        stderr_excess_risk: None,
        mean_empirical_excess: None,
        stderr_empirical_excess: None,
        capacity_at_measured_risk: None,
        audit_epsilon_hat: None,
        error: e.to_string(),
    }
}

/// Run the whole grid. Grid points execute in parallel but the output order
/// and every random stream are fixed by the config alone, so repeated runs
/// are bitwise identical. A failing point becomes a row with its error
/// recorded; the sweep itself only fails on an invalid config.
pub fn run_capacity_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let grid = config.grid();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, d, m, eps))| {
            let point_seed = derive_seed(config.base_seed, idx as u64);
            run_point(config, n, d, m, eps, point_seed)
                .unwrap_or_else(|e| failed_row(config, n, d, m, eps, e))
        })
        .collect();
    let summary = analyze(config, &rows);
    Ok(SweepResult {
        config: config.clone(),
        rows,
        summary,
    })
}
