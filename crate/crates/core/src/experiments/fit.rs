//! Scaling-law fits over sweep rows: the through-origin risk constant, the
//! joint log-log exponent regression, and the held-out capacity-contract
//! check that turns the fitted constant into a calibrated capacity
//! calculator.

use serde::{Deserialize, Serialize};

use crate::accountant::{deletion_capacity, ApproxDpBudget, CapacityQuery, CapacityRegime};
use crate::error::{Error, Result};

use super::config::SweepConfig;
use super::sweep::{SweepRow, SweepSummary};

/// Minimum number of usable grid points before any constant is fitted.
pub const MIN_FIT_POINTS: usize = 6;

/// Through-origin least-squares fit of risk ≈ C · x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub constant: f64,
    /// Root-mean-square of the residuals y − Cx.
    pub residual_rms: f64,
    pub points: usize,
}

/// Exponents of the joint regression
/// log risk = intercept + a·log m + b·log(1/n) + c·log √d + e·log(1/ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimates {
    pub intercept: f64,
    pub m: f64,
    pub inv_n: f64,
    pub sqrt_d: f64,
    pub inv_eps: f64,
}

/// The regime's risk-vs-parameters design coordinate for one row: the
/// quantity the measured risk is proportional to when the closed-form
/// capacity bound is tight.
fn design_x(regime: CapacityRegime, row: &SweepRow) -> Result<f64> {
    let m_eff = row.m.max(1) as f64;
    let n = row.n as f64;
    let d = row.d as f64;
    let eps = row.epsilon;
    let log_inv_delta = -row.delta.ln();
    let approx = m_eff * (d * log_inv_delta).sqrt() / (n * eps);
    let pure = m_eff * d.sqrt() / (n * eps);
    Ok(match regime {
        CapacityRegime::ApproxConvexFloor | CapacityRegime::ApproxConvexCeiling => approx,
        CapacityRegime::ApproxStronglyConvex => approx * approx,
        CapacityRegime::PureConvexFloor | CapacityRegime::PureConvexCeiling => pure,
    })
}

/// Successful deletion rows (m ≥ 1) with a positive measured risk — the
/// only rows a scaling law can be fitted on.
fn fit_rows(rows: &[SweepRow]) -> Vec<&SweepRow> {
    rows.iter()
        .filter(|r| {
            r.m >= 1
                && r.error.is_empty()
                && r.mean_excess_risk.map(|y| y.is_finite() && y > 0.0) == Some(true)
        })
        .collect()
}

fn fit_through_origin(points: &[(f64, f64)]) -> Result<FitReport> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "capacity fit needs ≥ {MIN_FIT_POINTS} usable grid points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidParameter(
                "capacity fit given a non-finite coordinate".into(),
            ));
        }
    }
    let sxx: f64 = points.iter().map(|&(x, _)| x * x).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "capacity fit design is degenerate: every x-coordinate is zero".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|&(x, y)| x * y).sum();
    let constant = sxy / sxx;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - constant * x;
            r * r
        })
        .sum();
    Ok(FitReport {
        constant,
        residual_rms: (ss / points.len() as f64).sqrt(),
        points: points.len(),
    })
}

/// Fit the hidden constant of `regime`'s risk bound on a sweep's rows:
/// least squares through the origin of measured risk against the regime's
/// design coordinate. Needs at least [`MIN_FIT_POINTS`] successful deletion
/// rows and a nondegenerate design.
pub fn fit_capacity_constant(rows: &[SweepRow], regime: CapacityRegime) -> Result<FitReport> {
    let usable = fit_rows(rows);
    let points: Vec<(f64, f64)> = usable
        .iter()
        .map(|r| Ok((design_x(regime, r)?, r.mean_excess_risk.unwrap())))
        .collect::<Result<_>>()?;
    fit_through_origin(&points)
}

/// Solve the square system `a · x = b` by Gaussian elimination with partial
/// pivoting. Small dense systems only (the slope regression is 5×5).
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::InsufficientData(
                "slope regression design is singular: a grid axis never varies".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in (col + 1)..n {
            let f = a[row][col] / pivot_row[col];
            for (entry, &p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *entry -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

/// Joint ordinary-least-squares regression of log risk on
/// [1, log m, log(1/n), log √d, log(1/ε)] over the successful deletion rows.
/// Every regressor must actually vary across the grid, otherwise the normal
/// equations are singular and the fit refuses.
pub fn fit_log_slopes(rows: &[SweepRow]) -> Result<SlopeEstimates> {
    let usable = fit_rows(rows);
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "slope regression needs ≥ {MIN_FIT_POINTS} usable grid points, got {}",
            usable.len()
        )));
    }
    let design: Vec<[f64; 5]> = usable
        .iter()
        .map(|r| {
            [
                1.0,
                (r.m as f64).ln(),
                (1.0 / r.n as f64).ln(),
                (r.d as f64).sqrt().ln(),
                (1.0 / r.epsilon).ln(),
            ]
        })
        .collect();
    let target: Vec<f64> = usable
        .iter()
        .map(|r| r.mean_excess_risk.unwrap().ln())
        .collect();

    let mut ata = vec![vec![0.0; 5]; 5];
    let mut atb = vec![0.0; 5];
    for (x, &y) in design.iter().zip(&target) {
        for i in 0..5 {
            for j in 0..5 {
                ata[i][j] += x[i] * x[j];
            }
            atb[i] += x[i] * y;
        }
    }
    let beta = solve_linear(ata, atb)?;
    Ok(SlopeEstimates {
        intercept: beta[0],
        m: beta[1],
        inv_n: beta[2],
        sqrt_d: beta[3],
        inv_eps: beta[4],
    })
}

/// Relative gap between two half-grid constants: |a − b| / mean(a, b).
fn relative_spread(a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    if mid == 0.0 {
        return f64::INFINITY;
    }
    ((a - b) / mid).abs()
}

/// Invert a fitted risk constant into the capacity calculator's constant so
/// that capacity(α = risk(m) / margin) recovers m. The inversion depends on
/// how α enters the regime's rate: linearly for the approx-convex bounds,
/// as √α for the strongly convex one. The pure regimes have no single
/// constant that round-trips (their rates carry α² or an extra √d), so the
/// contract is not calibrated for them.
pub fn capacity_constant_for(regime: CapacityRegime, margin: f64, c_hat: f64) -> Option<f64> {
    if !(c_hat.is_finite() && c_hat > 0.0 && margin > 0.0) {
        return None;
    }
    match regime {
        CapacityRegime::ApproxConvexFloor | CapacityRegime::ApproxConvexCeiling => {
            Some(margin / c_hat)
        }
        CapacityRegime::ApproxStronglyConvex => Some((margin / c_hat).sqrt()),
        CapacityRegime::PureConvexFloor | CapacityRegime::PureConvexCeiling => None,
    }
}

/// Held-out capacity-contract check. The constant fitted on the even half
/// becomes a capacity constant C_cap = margin / Ĉ; each odd-half row then
/// implies the accuracy target α whose predicted capacity is that row's m,
/// and the contract holds at the row when its measured risk stays ≤ α.
/// Returns (fraction holding, points checked).
fn contract_check(
    config: &SweepConfig,
    held_out: &[&SweepRow],
    constant_even: f64,
) -> Option<(f64, usize)> {
    if constant_even <= 0.0 || !constant_even.is_finite() || held_out.is_empty() {
        return None;
    }
    let capacity_constant =
        capacity_constant_for(config.regime, config.contract_margin, constant_even)?;
    let mut holds = 0usize;
    let mut total = 0usize;
    for row in held_out {
        let x = design_x(config.regime, row).ok()?;
        let alpha = (constant_even / config.contract_margin) * x;
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            continue;
        }
        let budget = ApproxDpBudget::new(row.epsilon, row.delta).ok()?;
        let query = CapacityQuery::new(config.regime, row.n as u64, row.d as u64, alpha, budget)
            .with_constant(capacity_constant);
        let predicted = deletion_capacity(&query).ok()?;
        // α was built so the predicted capacity recovers this row's m (up to
        // the floor); with a lazy deleter the measured risk at the row's
        // calibration upper-bounds the risk at any capacity ≤ m, so the
        // row's own measurement decides the contract.
        debug_assert!(predicted <= row.m as u64 + 1);
        total += 1;
        if row.mean_excess_risk.unwrap() <= alpha {
            holds += 1;
        }
    }
    if total == 0 {
        return None;
    }
    Some((holds as f64 / total as f64, total))
}

/// Build the sweep summary: fit the constant on all usable rows, refit on
/// the interleaved halves for stability, regress the exponents, and check
/// the capacity contract on the held-out half. Components that the grid
/// cannot support (too few points, an axis that never varies) stay `None`;
/// with verification enabled any missing component fails the sweep.
pub fn analyze(config: &SweepConfig, rows: &[SweepRow]) -> SweepSummary {
    let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
    let usable = fit_rows(rows);

    let full_fit = fit_capacity_constant(rows, config.regime).ok();
    let (even_rows, odd_rows): (Vec<&SweepRow>, Vec<&SweepRow>) =
        usable
            .iter()
            .enumerate()
            .fold((Vec::new(), Vec::new()), |(mut even, mut odd), (i, r)| {
                if i % 2 == 0 {
                    even.push(*r);
                } else {
                    odd.push(*r);
                }
                (even, odd)
            });
    let half_fit = |half: &[&SweepRow]| {
        let points: Vec<(f64, f64)> = half
            .iter()
            .filter_map(|r| {
                design_x(config.regime, r)
                    .ok()
                    .map(|x| (x, r.mean_excess_risk.unwrap()))
            })
            .collect();
        fit_through_origin(&points).ok()
    };
    let even_fit = half_fit(&even_rows);
    let odd_fit = half_fit(&odd_rows);
    let spread = match (&even_fit, &odd_fit) {
        (Some(e), Some(o)) => Some(relative_spread(e.constant, o.constant)),
        _ => None,
    };

    let slopes = fit_log_slopes(rows).ok();

    let contract = even_fit
        .as_ref()
        .and_then(|e| contract_check(config, &odd_rows, e.constant));
    let capacity_constant = even_fit
        .as_ref()
        .and_then(|e| capacity_constant_for(config.regime, config.contract_margin, e.constant));

    let pass = if config.verify {
        let slopes_ok = slopes.map(|s| {
            (s.m - 1.0).abs() <= config.slope_tolerance
                && (s.inv_n - 1.0).abs() <= config.slope_tolerance
                && (s.sqrt_d - 1.0).abs() <= config.slope_tolerance
                && (s.inv_eps - 1.0).abs() <= config.slope_tolerance
        });
        let stability_ok = spread.map(|s| s <= config.stability_tolerance);
        let contract_ok = contract.map(|(frac, _)| frac >= config.contract_fraction_min);
        Some(
            failures == 0
                && slopes_ok == Some(true)
                && stability_ok == Some(true)
                && contract_ok == Some(true),
        )
    } else {
        None
    };

    SweepSummary {
        rows: rows.len(),
        failures,
        fitted_constant: full_fit.as_ref().map(|f| f.constant),
        residual_rms: full_fit.as_ref().map(|f| f.residual_rms),
        constant_even: even_fit.as_ref().map(|f| f.constant),
        constant_odd: odd_fit.as_ref().map(|f| f.constant),
        constant_spread: spread,
        slope_m: slopes.map(|s| s.m),
        slope_inv_n: slopes.map(|s| s.inv_n),
        slope_sqrt_d: slopes.map(|s| s.sqrt_d),
        slope_inv_eps: slopes.map(|s| s.inv_eps),
        capacity_constant,
        contract_fraction: contract.map(|(frac, _)| frac),
        contract_points: contract.map(|(_, total)| total),
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows whose measured risk is exactly `c` times the design coordinate,
    /// over a small full-factorial grid.
    fn synthetic_rows(c: f64) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for &n in &[256usize, 1024] {
            for &d in &[2usize, 8, 32] {
                for &m in &[1usize, 2, 4, 8] {
                    for &eps in &[1.0f64, 2.0] {
                        let delta = 1e-5;
                        let x = super::super::sweep::privacy_term(n, d, m, eps, delta);
                        rows.push(SweepRow {
                            n,
                            d,
                            m,
                            epsilon: eps,
                            delta,
                            seeds: 1,
                            rho: None,
                            sigma: None,
                            marginal_norm: None,
                            privacy_term: Some(x),
                            mean_excess_risk: Some(c * x),
                            stderr_excess_risk: Some(0.0),
                            mean_empirical_excess: Some(c * x),
                            stderr_empirical_excess: Some(0.0),
                            capacity_at_measured_risk: None,
                            audit_epsilon_hat: None,
                            error: String::new(),
                        });
                    }
                }
            }
        }
        rows
    }

    #[test]
    fn recovers_a_planted_constant_exactly() {
        let rows = synthetic_rows(2.0);
        let fit = fit_capacity_constant(&rows, CapacityRegime::ApproxConvexFloor).unwrap();
        assert!(
            (fit.constant - 2.0).abs() < 1e-6,
            "fitted {} instead of 2",
            fit.constant
        );
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.points, 48);
    }

    #[test]
    fn planted_constant_is_stable_across_disjoint_subgrids() {
        let rows = synthetic_rows(2.0);
        let (first, second) = rows.split_at(rows.len() / 2);
        let fa = fit_capacity_constant(first, CapacityRegime::ApproxConvexFloor).unwrap();
        let fb = fit_capacity_constant(second, CapacityRegime::ApproxConvexFloor).unwrap();
        assert!(relative_spread(fa.constant, fb.constant) < 0.25);
    }

    #[test]
    fn too_few_points_is_insufficient_data() {
        let rows: Vec<SweepRow> = synthetic_rows(1.0).into_iter().take(5).collect();
        let err = fit_capacity_constant(&rows, CapacityRegime::ApproxConvexFloor).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }

    #[test]
    fn degenerate_design_is_insufficient_data() {
        let points = vec![(0.0, 1.0); 10];
        let err = fit_through_origin(&points).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }

    #[test]
    fn failed_and_baseline_rows_are_excluded_from_fits() {
        let mut rows = synthetic_rows(2.0);
        // A failed row and an m = 0 row with absurd risks must not move the fit.
        let mut broken = rows[0].clone();
        broken.error = "boom".into();
        broken.mean_excess_risk = Some(1e6);
        rows.push(broken);
        let mut baseline = rows[0].clone();
        baseline.m = 0;
        baseline.mean_excess_risk = Some(1e6);
        rows.push(baseline);
        let fit = fit_capacity_constant(&rows, CapacityRegime::ApproxConvexFloor).unwrap();
        assert!((fit.constant - 2.0).abs() < 1e-6);
        assert_eq!(fit.points, 48);
    }

    #[test]
    fn exact_power_law_yields_unit_slopes() {
        let rows = synthetic_rows(0.37);
        let slopes = fit_log_slopes(&rows).unwrap();
        assert!((slopes.m - 1.0).abs() < 1e-9, "m slope {}", slopes.m);
        assert!(
            (slopes.inv_n - 1.0).abs() < 1e-9,
            "n slope {}",
            slopes.inv_n
        );
        assert!(
            (slopes.sqrt_d - 1.0).abs() < 1e-9,
            "d slope {}",
            slopes.sqrt_d
        );
        assert!(
            (slopes.inv_eps - 1.0).abs() < 1e-9,
            "ε slope {}",
            slopes.inv_eps
        );
        // Intercept absorbs ln C + ln √ln(1/δ).
        let expected = 0.37f64.ln() + (-(1e-5f64).ln()).sqrt().ln();
        assert!((slopes.intercept - expected).abs() < 1e-9);
    }

    #[test]
    fn slope_regression_refuses_a_frozen_axis() {
        let rows: Vec<SweepRow> = synthetic_rows(1.0)
            .into_iter()
            .filter(|r| r.epsilon == 1.0)
            .collect();
        let err = fit_log_slopes(&rows).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
    }

    #[test]
    fn strongly_convex_design_squares_the_privacy_term() {
        let rows = synthetic_rows(1.0);
        let x_floor = design_x(CapacityRegime::ApproxConvexFloor, &rows[0]).unwrap();
        let x_sc = design_x(CapacityRegime::ApproxStronglyConvex, &rows[0]).unwrap();
        assert!((x_sc - x_floor * x_floor).abs() < 1e-15);
        let x_pure = design_x(CapacityRegime::PureConvexFloor, &rows[0]).unwrap();
        let log_inv_delta: f64 = -(1e-5f64).ln();
        assert!((x_floor / x_pure - log_inv_delta.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn analyze_passes_a_perfect_synthetic_sweep() {
        let config = SweepConfig {
            m: vec![1, 2, 4, 8],
            ..SweepConfig::default()
        };
        let rows = synthetic_rows(2.0);
        let summary = analyze(&config, &rows);
        assert_eq!(summary.failures, 0);
        assert_eq!(summary.pass, Some(true));
        assert!((summary.fitted_constant.unwrap() - 2.0).abs() < 1e-9);
        assert!(summary.constant_spread.unwrap() < 1e-9);
        assert_eq!(summary.contract_fraction, Some(1.0));
        let c_cap = summary.capacity_constant.unwrap();
        assert!((c_cap - 0.9 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn analyze_fails_a_wrong_exponent_sweep() {
        // Risk ∝ x² has slope 2 in every axis: verification must fail even
        // though a through-origin "constant" still technically fits.
        let config = SweepConfig {
            m: vec![1, 2, 4, 8],
            ..SweepConfig::default()
        };
        let mut rows = synthetic_rows(1.0);
        for row in &mut rows {
            let x = row.privacy_term.unwrap();
            row.mean_excess_risk = Some(2.0 * x * x);
        }
        let summary = analyze(&config, &rows);
        assert_eq!(summary.pass, Some(false));
    }

    #[test]
    fn analyze_on_a_tiny_grid_reports_nothing_but_counts() {
        let config = SweepConfig {
            verify: false,
            ..SweepConfig::default()
        };
        let rows: Vec<SweepRow> = synthetic_rows(1.0).into_iter().take(3).collect();
        let summary = analyze(&config, &rows);
        assert_eq!(summary.rows, 3);
        assert_eq!(summary.fitted_constant, None);
        assert_eq!(summary.slope_m, None);
        assert_eq!(summary.pass, None);
    }

    #[test]
    fn strongly_convex_inversion_round_trips_capacity() {
        // Plant risk = 3 · x² (the strongly convex law), fit, and check the
        // inverted constant drives the calculator back to the planted m.
        let mut rows = synthetic_rows(1.0);
        for row in &mut rows {
            let x = row.privacy_term.unwrap();
            row.mean_excess_risk = Some(3.0 * x * x);
        }
        let fit = fit_capacity_constant(&rows, CapacityRegime::ApproxStronglyConvex).unwrap();
        assert!((fit.constant - 3.0).abs() < 1e-9);
        let margin = 0.9;
        let c_cap =
            capacity_constant_for(CapacityRegime::ApproxStronglyConvex, margin, 3.0).unwrap();
        assert!((c_cap - (margin / 3.0).sqrt()).abs() < 1e-12);
        for row in rows.iter().step_by(7) {
            let x2 = design_x(CapacityRegime::ApproxStronglyConvex, row).unwrap();
            let alpha = (3.0 / margin) * x2;
            if alpha > 1.0 {
                continue;
            }
            let budget = ApproxDpBudget::new(row.epsilon, row.delta).unwrap();
            let query = CapacityQuery::new(
                CapacityRegime::ApproxStronglyConvex,
                row.n as u64,
                row.d as u64,
                alpha,
                budget,
            )
            .with_constant(c_cap);
            let predicted = deletion_capacity(&query).unwrap();
            assert!(
                predicted == row.m as u64 || predicted + 1 == row.m as u64,
                "strongly convex capacity {predicted} misses m = {}",
                row.m
            );
        }
        assert_eq!(
            capacity_constant_for(CapacityRegime::PureConvexFloor, margin, 3.0),
            None
        );
    }

    #[test]
    fn contract_recovers_the_planted_capacity() {
        // With an exact risk law the implied α at each held-out row
        // round-trips through the capacity calculator to that row's m.
        let config = SweepConfig {
            m: vec![1, 2, 4, 8],
            ..SweepConfig::default()
        };
        let rows = synthetic_rows(2.0);
        let usable = fit_rows(&rows);
        let odd: Vec<&SweepRow> = usable
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 1)
            .map(|(_, r)| *r)
            .collect();
        for row in &odd {
            let x = design_x(config.regime, row).unwrap();
            let alpha = (2.0 / config.contract_margin) * x;
            let budget = ApproxDpBudget::new(row.epsilon, row.delta).unwrap();
            let query =
                CapacityQuery::new(config.regime, row.n as u64, row.d as u64, alpha, budget)
                    .with_constant(config.contract_margin / 2.0);
            let predicted = deletion_capacity(&query).unwrap();
            assert!(
                predicted == row.m as u64 || predicted + 1 == row.m as u64,
                "capacity {predicted} does not round-trip to m = {}",
                row.m
            );
        }
    }
}
