//! Numeric utilities: correctly rounded summation, deterministic seed
//! derivation, and small dense-vector helpers shared across modules.

/// Sum of a sequence of `f64`s, correctly rounded as if computed in exact
/// arithmetic and rounded once at the end (Shewchuk's expansion algorithm).
///
/// Exactness matters here: the hard-instance reductions promise *bitwise*
/// equalities such as "replicating every point m times leaves the one-way
/// marginal unchanged", which hold for the true mean but not for naive
/// left-to-right floating-point accumulation. With a correctly rounded sum,
/// scaling the true total by a power of two scales the rounded result by the
/// same power, which is what the replication and padding identities need.
pub fn exact_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    // Accumulate a list of non-overlapping partials whose exact sum equals
    // the exact sum of the inputs.
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        debug_assert!(!x.is_nan(), "exact_sum received NaN");
        let mut live = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[live] = lo;
                live += 1;
            }
            x = hi;
        }
        partials.truncate(live);
        partials.push(x);
    }

    // Condense the partials from largest to smallest, tracking the first
    // discarded residual so ties round correctly (round-half-to-even on the
    // exact value, not on an intermediate).
    let mut i = match partials.len() {
        0 => return 0.0,
        len => len - 1,
    };
    let mut total = partials[i];
    let mut residual = 0.0;
    while i > 0 {
        i -= 1;
        let x = total;
        let y = partials[i];
        total = x + y;
        residual = y - (total - x);
        if residual != 0.0 {
            break;
        }
    }
    if residual != 0.0 && i > 0 && (residual < 0.0) == (partials[i - 1] < 0.0) {
        let correction = residual * 2.0;
        let adjusted = total + correction;
        if correction == adjusted - total {
            total = adjusted;
        }
    }
    total
}

/// Mean via [`exact_sum`]; the division is a single correctly rounded step.
pub fn exact_mean<I>(values: I, n: usize) -> f64
where
    I: IntoIterator<Item = f64>,
{
    debug_assert!(n > 0);
    exact_sum(values) / n as f64
}

/// Derive the `index`-th child seed from a base seed.
///
/// SplitMix64 applied to `base + (index + 1) · φ64`, the standard stream
/// splitter for counter-mode seeding: children of different indices (and of
/// different bases) are decorrelated, and the map is pure, so every parallel
/// trial can derive its own RNG without sharing state.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inner product. Panics on length mismatch (callers validate dimensions at
/// their API boundary).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Squared Euclidean distance.
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dist2_sq: length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `v / ‖v‖₂`, or an error description if the norm underflows.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm2(v);
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sum_cancellation() {
        // Naive summation loses the 1.0 entirely.
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([1e16, 1.0, -1e16, 1.0]), 2.0);
    }

    #[test]
    fn exact_sum_tenths() {
        // Ten copies of fl(0.1) sum exactly to 1.0000000000000000555…,
        // whose nearest double is 1.0 (naive accumulation gives
        // 0.9999999999999999).
        let v = [0.1f64; 10];
        assert_eq!(exact_sum(v.iter().copied()), 1.0);
        let naive: f64 = v.iter().sum();
        assert_ne!(naive, 1.0);
    }

    #[test]
    fn exact_sum_empty_and_single() {
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
        assert_eq!(exact_sum([-3.5]), -3.5);
    }

    #[test]
    fn exact_sum_half_ulp_tie() {
        // 1 + 2^-53 is exactly halfway between 1.0 and the next double;
        // adding another 2^-53 must push the correctly rounded sum up.
        let ulp_half = (2.0f64).powi(-53);
        assert_eq!(exact_sum([1.0, ulp_half]), 1.0);
        assert_eq!(exact_sum([1.0, ulp_half, ulp_half]), 1.0 + 2.0 * ulp_half);
    }

    #[test]
    fn derive_seed_decorrelates() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, 0));
    }

    #[test]
    fn normalize_unit_norm() {
        let v = normalize(&[3.0, 4.0]).unwrap();
        assert!((norm2(&v) - 1.0).abs() < 1e-15);
        assert!(normalize(&[0.0, 0.0]).is_none());
    }

    proptest! {
        /// Power-of-two scaling commutes with the correctly rounded sum:
        /// fl(Σ 2^k·xᵢ) = 2^k · fl(Σ xᵢ) whenever no overflow occurs.
        #[test]
        fn sum_commutes_with_pow2_scaling(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..40),
            k in 0u32..4,
        ) {
            let scale = (1u64 << k) as f64;
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            prop_assert_eq!(exact_sum(scaled), scale * exact_sum(xs.iter().copied()));
        }

        /// Replicating the multiset m = 2^k times multiplies the correctly
        /// rounded sum by exactly m, regardless of interleaving order.
        #[test]
        fn sum_of_replicated_sequence(
            xs in proptest::collection::vec(-1e3f64..1e3, 1..20),
            k in 1u32..4,
        ) {
            let m = 1usize << k;
            let mut reps = Vec::with_capacity(xs.len() * m);
            for x in &xs {
                for _ in 0..m {
                    reps.push(*x);
                }
            }
            prop_assert_eq!(exact_sum(reps), m as f64 * exact_sum(xs.iter().copied()));
        }

        /// The correctly rounded sum is permutation invariant.
        #[test]
        fn sum_permutation_invariant(
            xs in proptest::collection::vec(-1e12f64..1e12, 1..30),
        ) {
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert_eq!(exact_sum(xs.iter().copied()), exact_sum(rev));
        }

        /// Agreement with naive summation on benign inputs (no cancellation
        /// traps): within a few ulps of the naive result.
        #[test]
        fn sum_close_to_naive_on_benign_input(
            xs in proptest::collection::vec(0.0f64..1e3, 1..50),
        ) {
            let naive: f64 = xs.iter().sum();
            let exact = exact_sum(xs.iter().copied());
            let tol = 1e-12 * naive.max(1.0);
            prop_assert!((exact - naive).abs() <= tol);
        }
    }
}
