//! Scaled-hypercube instances and their reductions.
//!
//! Datasets here live (mostly) on {−1/√d, +1/√d}^d, so every point has unit
//! ℓ₂ norm. The statistic of interest is the one-way marginal q(S) — the
//! coordinate-wise average — and the loss is linear, −⟨θ, q(S)⟩, whose
//! constrained minimizer over the unit ball is θ* = q/‖q‖. The padding,
//! replication, and rescaling maps transfer estimators between instance
//! sizes and scalings while preserving q exactly; tests pin those identities
//! bitwise, which is why the marginal is computed through exact arithmetic
//! rather than naive accumulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{self, exact_sum};

/// The positive coordinate value of the scaled hypercube: +1/√d.
pub fn hypercube_coord(d: usize) -> f64 {
    1.0 / (d as f64).sqrt()
}

/// An ordered, immutable collection of n points in ℝ^d (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: Vec<f64>,
    d: usize,
    /// True iff n ≥ 1 and every coordinate is bitwise ±1/√d. Cached at
    /// construction; selects the exact integer-counting marginal path.
    hypercube: bool,
}

impl Dataset {
    pub fn from_flat(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "flat data length {} is not a multiple of dimension {d}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dataset coordinates must be finite, got {bad}"
            )));
        }
        let c = hypercube_coord(d);
        let hypercube = !data.is_empty() && data.iter().all(|&x| x == c || x == -c);
        Ok(Dataset { data, d, hypercube })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = match rows.first() {
            Some(r) => r.len(),
            None => {
                return Err(Error::InvalidParameter(
                    "cannot infer dimension from zero rows; use from_flat".into(),
                ))
            }
        };
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            let _ = i;
        }
        Self::from_flat(rows.concat(), d)
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn is_on_hypercube(&self) -> bool {
        self.hypercube
    }

    /// A new dataset with the given rows removed; order of the survivors is
    /// preserved.
    pub fn remove_indices(&self, indices: &BTreeSet<usize>) -> Result<Dataset> {
        let n = self.n();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: n,
            });
        }
        let mut data = Vec::with_capacity(self.data.len() - indices.len() * self.d);
        for (i, p) in self.iter_points().enumerate() {
            if !indices.contains(&i) {
                data.extend_from_slice(p);
            }
        }
        Dataset::from_flat(data, self.d)
    }

    /// Write one row per point, no header, shortest round-trip decimal
    /// formatting (reading the file back reproduces every coordinate
    /// bitwise).
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        for p in self.iter_points() {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in r.deserialize() {
            rows.push(rec?);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Dataset::from_rows(&rows)
    }
}

/// Sidecar metadata for a generated dataset: enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Per-coordinate probability of the positive sign (uniform across
    /// coordinates for generated instances; None for file-loaded data).
    pub bias: Option<f64>,
    /// Generator family, e.g. "product" or "two-block".
    pub kind: String,
}

impl DatasetManifest {
    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Coordinate-independent sign distribution on the scaled hypercube:
/// coordinate j equals +1/√d with probability p_j, else −1/√d.
/// Mean μ = (2p − 1)/√d, so ‖μ‖₂ ≤ 1 automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    bias: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(bias: Vec<f64>) -> Result<Self> {
        if bias.is_empty() {
            return Err(Error::InvalidParameter(
                "product distribution needs dimension ≥ 1".into(),
            ));
        }
        if let Some(bad) = bias
            .iter()
            .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InvalidParameter(format!(
                "bias probabilities must lie in [0, 1], got {bad}"
            )));
        }
        Ok(ProductDistribution { bias })
    }

    pub fn uniform(d: usize, p: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        Self::new(vec![p; d])
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// μ_j = (2·p_j − 1)/√d.
    pub fn mean(&self) -> Vec<f64> {
        let c = hypercube_coord(self.dim());
        self.bias.iter().map(|p| (2.0 * p - 1.0) * c).collect()
    }

    /// n i.i.d. points, deterministic per seed. Coordinates are drawn in
    /// row-major order from a counter-seeded ChaCha stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be ≥ 1".into()));
        }
        let d = self.dim();
        let c = hypercube_coord(d);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            for p in &self.bias {
                let u: f64 = rng.random();
                data.push(if u < *p { c } else { -c });
            }
        }
        Dataset::from_flat(data, d)
    }
}

/// n i.i.d. scaled-hypercube points with uniform positive-sign probability
/// `bias` (default ¾, which gives the instance a nonzero mean and therefore
/// a well-defined minimizer direction).
pub fn gen_hard_dataset(n: usize, d: usize, seed: u64, bias: Option<f64>) -> Result<Dataset> {
    ProductDistribution::uniform(d, bias.unwrap_or(0.75))?.sample(n, seed)
}

/// Deterministic instance with `plus_rows` all-positive points followed by
/// n − plus_rows all-negative points. Every coordinate of its marginal is
/// exactly ((2·plus_rows − n)/n)·(1/√d), making it the zero-sampling-error
/// way to hit a target marginal norm.
pub fn two_block_dataset(n: usize, d: usize, plus_rows: usize) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and d ≥ 1".into()));
    }
    if plus_rows > n {
        return Err(Error::InvalidParameter(format!(
            "plus_rows {plus_rows} exceeds n {n}"
        )));
    }
    let c = hypercube_coord(d);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let v = if i < plus_rows { c } else { -c };
        data.extend(std::iter::repeat_n(v, d));
    }
    Dataset::from_flat(data, d)
}

/// The one-way marginal q(S): the coordinate-wise average.
///
/// Sign datasets take an exact path — count positive entries per coordinate
/// and evaluate ((2k − n)/n)·(1/√d) with one correctly rounded division —
/// so replicating every point m times reproduces q bitwise for *every* m
/// (the rational (2k−n)/n is invariant under m·k/m·n). General datasets use
/// correctly rounded summation, which gives the same guarantee for
/// power-of-two m.
pub fn one_way_marginal(dataset: &Dataset) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.n();
    let d = dataset.dim();
    if dataset.is_on_hypercube() {
        let c = hypercube_coord(d);
        let mut plus = vec![0i64; d];
        for p in dataset.iter_points() {
            for (j, &x) in p.iter().enumerate() {
                if x == c {
                    plus[j] += 1;
                }
            }
        }
        return Ok(plus
            .iter()
            .map(|&k| ((2 * k - n as i64) as f64 / n as f64) * c)
            .collect());
    }
    Ok((0..d)
        .map(|j| exact_sum(dataset.data.iter().skip(j).step_by(d).copied()) / n as f64)
        .collect())
}

/// Empirical linear loss −⟨θ, q(S)⟩.
pub fn linear_loss(theta: &[f64], dataset: &Dataset) -> Result<f64> {
    let q = one_way_marginal(dataset)?;
    if theta.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: theta.len(),
        });
    }
    Ok(-numeric::dot(theta, &q))
}

const DEGENERACY_TOL: f64 = 1e-12;

/// The constrained minimizer direction θ* = q(S)/‖q(S)‖₂ — the unit vector
/// minimizing the linear loss over the unit ball.
pub fn minimizer_theta_star(dataset: &Dataset) -> Result<Vec<f64>> {
    let q = one_way_marginal(dataset)?;
    // The degeneracy tolerance is stated on the *sum* Σxᵢ = n·q.
    let sum_norm = numeric::norm2(&q) * dataset.n() as f64;
    if sum_norm <= DEGENERACY_TOL {
        return Err(Error::DegenerateDataset(format!(
            "‖Σ xᵢ‖₂ = {sum_norm:.3e} ≤ {DEGENERACY_TOL:.0e}; minimizer direction undefined"
        )));
    }
    numeric::normalize(&q).ok_or_else(|| {
        Error::DegenerateDataset("marginal norm underflowed during normalization".into())
    })
}

/// Grow a dataset to `n_target` points by appending ⌈r/2⌉ copies of the
/// anchor point and ⌊r/2⌋ copies of its negation (r = n_target − n).
///
/// With an even remainder the appended pairs cancel, so q scales by exactly
/// n/n_target; an odd remainder leaves one unmatched anchor and perturbs the
/// scaled marginal by at most ‖anchor‖/n_target = 1/n_target.
pub fn pad_dataset(dataset: &Dataset, n_target: usize, anchor: &[f64]) -> Result<Dataset> {
    let n = dataset.n();
    let d = dataset.dim();
    if n_target < n {
        return Err(Error::InvalidParameter(format!(
            "cannot pad from {n} down to {n_target} points"
        )));
    }
    if anchor.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: anchor.len(),
        });
    }
    let c = hypercube_coord(d);
    if !anchor.iter().all(|&a| a == c || a == -c) {
        return Err(Error::InvalidParameter(format!(
            "anchor must be a scaled-hypercube point with coordinates ±{c}"
        )));
    }
    let r = n_target - n;
    let mut data = Vec::with_capacity(n_target * d);
    data.extend_from_slice(&dataset.data);
    for _ in 0..r.div_ceil(2) {
        data.extend_from_slice(anchor);
    }
    let negated: Vec<f64> = anchor.iter().map(|a| -a).collect();
    for _ in 0..r / 2 {
        data.extend_from_slice(&negated);
    }
    Dataset::from_flat(data, d)
}

/// Repeat every point m times consecutively: x₁,…,x₁, x₂,…,x₂, ….
/// q is preserved bitwise (see [`one_way_marginal`]).
pub fn replicate_dataset(dataset: &Dataset, m: usize) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "replication factor must be ≥ 1".into(),
        ));
    }
    let d = dataset.dim();
    let mut data = Vec::with_capacity(dataset.data.len() * m);
    for p in dataset.iter_points() {
        for _ in 0..m {
            data.extend_from_slice(p);
        }
    }
    Dataset::from_flat(data, d)
}

/// Map a ±1 sign dataset onto the scaled hypercube (divide by √d). The
/// conversion goes sign-by-sign to exact constants, so the round trip with
/// [`rescale_to_signs`] is a bitwise identity for every d.
pub fn rescale_from_signs(dataset: &Dataset) -> Result<Dataset> {
    let d = dataset.dim();
    let c = hypercube_coord(d);
    let data = dataset
        .data
        .iter()
        .map(|&x| {
            if x == 1.0 {
                Ok(c)
            } else if x == -1.0 {
                Ok(-c)
            } else {
                Err(Error::InvalidParameter(format!(
                    "rescale_from_signs expects coordinates ±1, got {x}"
                )))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Dataset::from_flat(data, d)
}

/// Map a scaled-hypercube dataset onto ±1 signs (multiply by √d).
pub fn rescale_to_signs(dataset: &Dataset) -> Result<Dataset> {
    let d = dataset.dim();
    let c = hypercube_coord(d);
    let data = dataset
        .data
        .iter()
        .map(|&x| {
            if x == c {
                Ok(1.0)
            } else if x == -c {
                Ok(-1.0)
            } else {
                Err(Error::InvalidParameter(format!(
                    "rescale_to_signs expects coordinates ±{c}, got {x}"
                )))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Dataset::from_flat(data, d)
}

/// Population excess risk of a unit-ball parameter under a product
/// distribution: F(θ) − F* = −⟨θ, μ⟩ + ‖μ‖₂ (the population minimizer is
/// μ/‖μ‖ with value −‖μ‖).
pub fn population_excess_risk(theta: &[f64], dist: &ProductDistribution) -> Result<f64> {
    let mu = dist.mean();
    if theta.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: theta.len(),
        });
    }
    let mu_norm = numeric::norm2(&mu);
    if mu_norm <= DEGENERACY_TOL {
        return Err(Error::DegenerateDistribution(format!(
            "‖μ‖₂ = {mu_norm:.3e}; excess risk is identically 0 and uninformative"
        )));
    }
    let theta_norm = numeric::norm2(theta);
    if theta_norm > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in the unit ball, got ‖θ‖₂ = {theta_norm}"
        )));
    }
    // Clamp away the −1e-16-scale residue at θ = μ/‖μ‖.
    Ok((mu_norm - numeric::dot(theta, &mu)).max(0.0))
}

/// Indices of the m points with the largest alignment ⟨x, q(S)⟩, ties broken
/// toward lower indices — the adversarial deletion set for the linear
/// instance (deleting them shifts q the most).
pub fn most_aligned_indices(dataset: &Dataset, m: usize) -> Result<Vec<usize>> {
    let n = dataset.n();
    if m > n {
        return Err(Error::InvalidParameter(format!(
            "cannot select {m} points from a dataset of {n}"
        )));
    }
    let q = one_way_marginal(dataset)?;
    let mut scored: Vec<(usize, f64)> = dataset
        .iter_points()
        .enumerate()
        .map(|(i, p)| (i, numeric::dot(p, &q)))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut idx: Vec<usize> = scored.into_iter().take(m).map(|(i, _)| i).collect();
    idx.sort_unstable();
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn generated_points_stay_on_support() {
        let ds = gen_hard_dataset(50, 7, 123, None).unwrap();
        assert_eq!(ds.n(), 50);
        assert_eq!(ds.dim(), 7);
        assert!(ds.is_on_hypercube());
        let c = hypercube_coord(7);
        for p in ds.iter_points() {
            assert!(p.iter().all(|&x| x == c || x == -c));
            assert_relative_eq!(numeric::norm2(p), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_bias_one_gives_unit_marginal() {
        let ds = gen_hard_dataset(10, 4, 9, Some(1.0)).unwrap();
        let c = hypercube_coord(4);
        assert!(ds.data.iter().all(|&x| x == c));
        let q = one_way_marginal(&ds).unwrap();
        assert!(q.iter().all(|&v| v == c));
        assert_relative_eq!(numeric::norm2(&q), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn marginal_concentrates_around_mean() {
        // ‖q − μ‖ ≤ 5/√n holds with probability ≥ 0.99 per seed; at 50 seeds
        // even one failure would be a ~0.01-probability event per trial and
        // the bound sits at ~17 standard deviations, so we require all pass.
        let n = 10_000;
        let dist = ProductDistribution::uniform(4, 0.75).unwrap();
        let mu = dist.mean();
        let bound = 5.0 / (n as f64).sqrt();
        for seed in 0..50u64 {
            let ds = dist.sample(n, seed).unwrap();
            let q = one_way_marginal(&ds).unwrap();
            let err = numeric::dist2_sq(&q, &mu).sqrt();
            assert!(err <= bound, "seed {seed}: ‖q−μ‖ = {err} > {bound}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = gen_hard_dataset(64, 8, 77, None).unwrap();
        let b = gen_hard_dataset(64, 8, 77, None).unwrap();
        let c = gen_hard_dataset(64, 8, 78, None).unwrap();
        assert_eq!(a.data, b.data);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn marginal_examples() {
        let c = hypercube_coord(2);
        // Single point: marginal is the point itself, bitwise.
        let single = Dataset::from_rows(&[vec![c, -c]]).unwrap();
        assert_eq!(one_way_marginal(&single).unwrap(), vec![c, -c]);

        // Antipodal pair cancels exactly.
        let pair = Dataset::from_rows(&[vec![c, c], vec![-c, -c]]).unwrap();
        assert_eq!(one_way_marginal(&pair).unwrap(), vec![0.0, 0.0]);

        // Hand-computed 4-point instance: column sums 2c and 0.
        let four =
            Dataset::from_rows(&[vec![c, c], vec![c, -c], vec![-c, c], vec![c, -c]]).unwrap();
        assert_eq!(one_way_marginal(&four).unwrap(), vec![0.5 * c, 0.0]);
    }

    #[test]
    fn marginal_general_path_for_off_cube_data() {
        let ds = Dataset::from_rows(&[vec![1.5, 2.0], vec![2.5, 4.0]]).unwrap();
        assert!(!ds.is_on_hypercube());
        assert_eq!(one_way_marginal(&ds).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn marginal_rejects_empty() {
        let empty = Dataset::from_flat(vec![], 3).unwrap();
        assert!(matches!(one_way_marginal(&empty), Err(Error::EmptyDataset)));
    }

    #[test]
    fn linear_loss_examples() {
        let ds = gen_hard_dataset(32, 4, 5, None).unwrap();
        let q = one_way_marginal(&ds).unwrap();

        assert_eq!(linear_loss(&[0.0; 4], &ds).unwrap(), 0.0);

        let theta_star = minimizer_theta_star(&ds).unwrap();
        assert_relative_eq!(
            linear_loss(&theta_star, &ds).unwrap(),
            -numeric::norm2(&q),
            max_relative = 1e-12
        );

        let theta = [0.1, -0.2, 0.3, 0.05];
        let scaled: Vec<f64> = theta.iter().map(|x| 2.5 * x).collect();
        assert_relative_eq!(
            linear_loss(&scaled, &ds).unwrap(),
            2.5 * linear_loss(&theta, &ds).unwrap(),
            max_relative = 1e-12
        );

        assert!(matches!(
            linear_loss(&[0.0; 3], &ds),
            Err(Error::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn minimizer_direction() {
        let c = hypercube_coord(3);
        let single = Dataset::from_rows(&[vec![c, -c, c]]).unwrap();
        let t = minimizer_theta_star(&single).unwrap();
        assert_relative_eq!(numeric::norm2(&t), 1.0, max_relative = 1e-12);
        for (a, b) in t.iter().zip([c, -c, c]) {
            assert_relative_eq!(a, &b, max_relative = 1e-12);
        }

        let antipodal = Dataset::from_rows(&[vec![c, c, c], vec![-c, -c, -c]]).unwrap();
        assert!(matches!(
            minimizer_theta_star(&antipodal),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn padding_identity_even_remainder() {
        let ds = gen_hard_dataset(4, 6, 11, None).unwrap();
        let c = hypercube_coord(6);
        let anchor = vec![c; 6];
        let q_in = one_way_marginal(&ds).unwrap();

        // Power-of-two ratio: scaling is bitwise.
        let padded = pad_dataset(&ds, 8, &anchor).unwrap();
        assert_eq!(padded.n(), 8);
        let q_out = one_way_marginal(&padded).unwrap();
        let expected: Vec<f64> = q_in.iter().map(|v| v * (4.0 / 8.0)).collect();
        assert_eq!(q_out, expected);

        // General even remainder: exact to 1e-15 relative.
        let padded10 = pad_dataset(&ds, 10, &anchor).unwrap();
        let q10 = one_way_marginal(&padded10).unwrap();
        for (got, want) in q10.iter().zip(q_in.iter().map(|v| v * 0.4)) {
            assert_relative_eq!(got, &want, max_relative = 1e-15, epsilon = 1e-18);
        }
    }

    #[test]
    fn padding_odd_remainder_bound() {
        let ds = gen_hard_dataset(4, 6, 13, None).unwrap();
        let c = hypercube_coord(6);
        // A mixed-sign anchor exercises the general case.
        let anchor = vec![c, -c, c, c, -c, c];
        let q_in = one_way_marginal(&ds).unwrap();
        let padded = pad_dataset(&ds, 9, &anchor).unwrap();
        let q_out = one_way_marginal(&padded).unwrap();
        let scaled: Vec<f64> = q_in.iter().map(|v| v * (4.0 / 9.0)).collect();
        let dev = numeric::dist2_sq(&q_out, &scaled).sqrt();
        assert!(dev <= 1.0 / 9.0 + 1e-12, "deviation {dev} > 1/9");
        // The single unmatched anchor contributes exactly ‖anchor‖/9 here.
        assert_relative_eq!(dev, 1.0 / 9.0, max_relative = 1e-9);
    }

    #[test]
    fn padding_guards() {
        let ds = gen_hard_dataset(4, 2, 1, None).unwrap();
        let c = hypercube_coord(2);
        assert!(matches!(
            pad_dataset(&ds, 3, &[c, c]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            pad_dataset(&ds, 8, &[0.5, c]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            pad_dataset(&ds, 8, &[c]),
            Err(Error::DimensionMismatch { .. })
        ));
        // No-op pad returns the same points.
        let same = pad_dataset(&ds, 4, &[c, c]).unwrap();
        assert_eq!(same.data, ds.data);
    }

    #[test]
    fn replication_preserves_marginal_bitwise_for_every_m() {
        let ds = gen_hard_dataset(12, 5, 21, None).unwrap();
        let q = one_way_marginal(&ds).unwrap();
        for m in 1..=8 {
            let rep = replicate_dataset(&ds, m).unwrap();
            assert_eq!(rep.n(), 12 * m);
            assert_eq!(one_way_marginal(&rep).unwrap(), q, "m = {m}");
        }
        assert!(replicate_dataset(&ds, 0).is_err());
        // m = 1 is the identity on the raw data.
        assert_eq!(replicate_dataset(&ds, 1).unwrap().data, ds.data);
    }

    #[test]
    fn replication_interleaves_consecutively() {
        let c = hypercube_coord(1);
        let ds = Dataset::from_rows(&[vec![c], vec![-c]]).unwrap();
        let rep = replicate_dataset(&ds, 3).unwrap();
        assert_eq!(rep.data, vec![c, c, c, -c, -c, -c]);
    }

    #[test]
    fn replication_general_data_power_of_two() {
        let ds = Dataset::from_rows(&[vec![0.1, 0.7], vec![-0.3, 0.2], vec![0.9, -0.5]]).unwrap();
        let q = one_way_marginal(&ds).unwrap();
        for m in [2usize, 4, 8] {
            let rep = replicate_dataset(&ds, m).unwrap();
            assert_eq!(one_way_marginal(&rep).unwrap(), q, "m = {m}");
        }
    }

    #[test]
    fn rescale_round_trips_bitwise() {
        for d in [1usize, 2, 3, 5, 8, 16, 17] {
            let ds = gen_hard_dataset(20, d, d as u64, None).unwrap();
            let signs = rescale_to_signs(&ds).unwrap();
            assert!(signs.data.iter().all(|&x| x == 1.0 || x == -1.0));
            let back = rescale_from_signs(&signs).unwrap();
            assert_eq!(back.data, ds.data, "d = {d}");
        }
        // d = 1: the scaled cube *is* the sign cube.
        let ds1 = gen_hard_dataset(8, 1, 3, None).unwrap();
        assert_eq!(rescale_to_signs(&ds1).unwrap().data, ds1.data);
    }

    #[test]
    fn rescale_rejects_off_support() {
        let ds = Dataset::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(rescale_to_signs(&ds).is_err());
        assert!(rescale_from_signs(&ds).is_err());
    }

    #[test]
    fn rescale_error_scaling_property() {
        // For an estimate a of q(S): ‖√d·a − q(√d·S)‖ = √d·‖a − q(S)‖.
        let d = 9;
        let ds = gen_hard_dataset(40, d, 2, None).unwrap();
        let q = one_way_marginal(&ds).unwrap();
        let signs = rescale_to_signs(&ds).unwrap();
        let q_signs = one_way_marginal(&signs).unwrap();
        let sqrt_d = (d as f64).sqrt();
        let estimate: Vec<f64> = q.iter().map(|v| v + 0.01).collect();
        let scaled_estimate: Vec<f64> = estimate.iter().map(|v| v * sqrt_d).collect();
        let lhs = numeric::dist2_sq(&scaled_estimate, &q_signs).sqrt();
        let rhs = sqrt_d * numeric::dist2_sq(&estimate, &q).sqrt();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
    }

    #[test]
    fn population_risk_examples() {
        let dist = ProductDistribution::uniform(4, 0.75).unwrap();
        let mu = dist.mean();
        let mu_norm = numeric::norm2(&mu);
        let mu_hat = numeric::normalize(&mu).unwrap();

        assert_abs_diff_eq!(
            population_excess_risk(&mu_hat, &dist).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let anti: Vec<f64> = mu_hat.iter().map(|x| -x).collect();
        assert_relative_eq!(
            population_excess_risk(&anti, &dist).unwrap(),
            2.0 * mu_norm,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            population_excess_risk(&[0.0; 4], &dist).unwrap(),
            mu_norm,
            max_relative = 1e-15
        );

        let balanced = ProductDistribution::uniform(4, 0.5).unwrap();
        assert!(matches!(
            population_excess_risk(&[0.0; 4], &balanced),
            Err(Error::DegenerateDistribution(_))
        ));
        assert!(population_excess_risk(&[1.0, 1.0, 0.0, 0.0], &dist).is_err());
        assert!(population_excess_risk(&[0.0; 3], &dist).is_err());
    }

    #[test]
    fn population_risk_matches_monte_carlo() {
        let dist = ProductDistribution::uniform(4, 0.75).unwrap();
        let theta = numeric::normalize(&[1.0, -0.5, 0.25, 0.8]).unwrap();
        let closed = population_excess_risk(&theta, &dist).unwrap();

        let trials = 100_000;
        let sample = dist.sample(trials, 4242).unwrap();
        let mu_norm = numeric::norm2(&dist.mean());
        let losses: Vec<f64> = sample
            .iter_points()
            .map(|x| mu_norm - numeric::dot(&theta, x))
            .collect();
        let mean = exact_sum(losses.iter().copied()) / trials as f64;
        let var = exact_sum(losses.iter().map(|l| (l - mean) * (l - mean))) / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        assert!(
            (closed - mean).abs() <= 3.0 * se,
            "closed {closed} vs MC {mean} ± {se}"
        );
    }

    #[test]
    fn two_block_marginal_is_exact() {
        let n = 48;
        let d = 5;
        let k = 30;
        let ds = two_block_dataset(n, d, k).unwrap();
        assert!(ds.is_on_hypercube());
        let q = one_way_marginal(&ds).unwrap();
        let c = hypercube_coord(d);
        let want = ((2 * k as i64 - n as i64) as f64 / n as f64) * c;
        assert!(q.iter().all(|&v| v == want));
        // ‖q‖ = |2k/n − 1| exactly in the reals.
        assert_relative_eq!(
            numeric::norm2(&q),
            (2.0 * k as f64 / n as f64 - 1.0).abs(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn aligned_indices_pick_plus_block() {
        let ds = two_block_dataset(10, 3, 6).unwrap();
        // q is positive, so the + rows are the aligned ones, in index order.
        assert_eq!(most_aligned_indices(&ds, 4).unwrap(), vec![0, 1, 2, 3]);
        assert!(most_aligned_indices(&ds, 11).is_err());
    }

    #[test]
    fn remove_indices_preserves_order() {
        let ds = two_block_dataset(5, 2, 3).unwrap();
        let removed = ds.remove_indices(&BTreeSet::from([0usize, 3])).unwrap();
        assert_eq!(removed.n(), 3);
        assert_eq!(removed.point(0), ds.point(1));
        assert_eq!(removed.point(1), ds.point(2));
        assert_eq!(removed.point(2), ds.point(4));
        assert!(matches!(
            ds.remove_indices(&BTreeSet::from([5usize])),
            Err(Error::IndexOutOfRange { index: 5, size: 5 })
        ));
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        let ds = gen_hard_dataset(25, 6, 99, None).unwrap();
        ds.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back.data, ds.data);
        assert!(back.is_on_hypercube());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = DatasetManifest {
            n: 64,
            d: 8,
            seed: 7,
            bias: Some(0.75),
            kind: "product".into(),
        };
        m.write_json(&path).unwrap();
        assert_eq!(DatasetManifest::read_json(&path).unwrap(), m);
    }

    #[test]
    fn dataset_construction_guards() {
        assert!(Dataset::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(Dataset::from_flat(vec![1.0, f64::NAN], 2).is_err());
        assert!(Dataset::from_flat(vec![1.0, f64::INFINITY], 2).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(gen_hard_dataset(0, 4, 1, None).is_err());
        assert!(gen_hard_dataset(4, 0, 1, None).is_err());
        assert!(gen_hard_dataset(4, 2, 1, Some(1.5)).is_err());
    }

    proptest! {
        /// The excess-loss identity: for unit θ and non-degenerate S,
        /// loss(θ) − loss(θ*) = ½‖q‖·‖θ − θ*‖².
        #[test]
        fn excess_loss_identity(
            n in 3usize..60,
            d in 1usize..12,
            seed in 0u64..500,
            raw in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let ds = gen_hard_dataset(n, d, seed, None).unwrap();
            let q = one_way_marginal(&ds).unwrap();
            let theta_star = match minimizer_theta_star(&ds) {
                Ok(t) => t,
                Err(_) => return Ok(()), // degenerate draw; skip
            };
            let theta = match numeric::normalize(&raw[..d]) {
                Some(t) => t,
                None => return Ok(()),
            };
            let lhs = linear_loss(&theta, &ds).unwrap() - linear_loss(&theta_star, &ds).unwrap();
            let rhs = 0.5 * numeric::norm2(&q) * numeric::dist2_sq(&theta, &theta_star);
            prop_assert!((lhs - rhs).abs() <= 1e-9, "identity gap {}", (lhs - rhs).abs());
        }

        /// ‖q(S)‖₂ ≤ 1 for hypercube data (triangle inequality on unit points).
        #[test]
        fn marginal_norm_bounded(
            n in 1usize..40,
            d in 1usize..10,
            seed in 0u64..200,
        ) {
            let ds = gen_hard_dataset(n, d, seed, None).unwrap();
            let q = one_way_marginal(&ds).unwrap();
            prop_assert!(numeric::norm2(&q) <= 1.0 + 1e-12);
        }

        /// Replication bitwise-preserves q on hypercube data for all m.
        #[test]
        fn replication_marginal_bitwise(
            n in 1usize..24,
            d in 1usize..8,
            seed in 0u64..100,
            m in 1usize..9,
        ) {
            let ds = gen_hard_dataset(n, d, seed, None).unwrap();
            let q = one_way_marginal(&ds).unwrap();
            let rep = replicate_dataset(&ds, m).unwrap();
            prop_assert_eq!(one_way_marginal(&rep).unwrap(), q);
        }

        /// Antipodal-pair padding keeps the marginal's scaled value within
        /// the documented bound for any anchor and remainder parity.
        #[test]
        fn padding_deviation_bound(
            n in 1usize..16,
            extra in 0usize..12,
            d in 1usize..6,
            seed in 0u64..100,
            anchor_seed in 0u64..50,
        ) {
            let ds = gen_hard_dataset(n, d, seed, None).unwrap();
            let anchor_ds = gen_hard_dataset(1, d, anchor_seed, None).unwrap();
            let anchor = anchor_ds.point(0).to_vec();
            let n_t = n + extra;
            let padded = pad_dataset(&ds, n_t, &anchor).unwrap();
            prop_assert_eq!(padded.n(), n_t);
            let q_in = one_way_marginal(&ds).unwrap();
            let q_out = one_way_marginal(&padded).unwrap();
            let scale = n as f64 / n_t as f64;
            let scaled: Vec<f64> = q_in.iter().map(|v| v * scale).collect();
            let dev = numeric::dist2_sq(&q_out, &scaled).sqrt();
            let bound = if extra % 2 == 0 { 1e-15 } else { 1.0 / n_t as f64 + 1e-12 };
            prop_assert!(dev <= bound, "dev {dev} bound {bound}");
        }
    }
}
