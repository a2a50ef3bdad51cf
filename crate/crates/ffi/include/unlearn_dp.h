#ifndef UNLEARN_DP_H
#define UNLEARN_DP_H

/* Generated by cbindgen from the unlearn-dp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Deletion-capacity regime selector. Pass as the `regime` argument of
 * [`unlearn_dp_deletion_capacity`] and [`unlearn_dp_train`].
 */
enum UnlearnDpRegime
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Smooth convex losses under (ε, δ) budgets: the supported lower bound.
   */
  UNLEARN_DP_REGIME_APPROX_CONVEX_FLOOR = 0,
  /**
   * Matching upper bound for the same class.
   */
  UNLEARN_DP_REGIME_APPROX_CONVEX_CEILING = 1,
  /**
   * Strongly convex losses under (ε, δ) budgets.
   */
  UNLEARN_DP_REGIME_APPROX_STRONGLY_CONVEX = 2,
  /**
   * Smooth convex losses under pure ε budgets (δ must be 0).
   */
  UNLEARN_DP_REGIME_PURE_CONVEX_FLOOR = 3,
  /**
   * Matching upper bound for pure ε budgets.
   */
  UNLEARN_DP_REGIME_PURE_CONVEX_CEILING = 4,
};
#ifndef __cplusplus
typedef int32_t UnlearnDpRegime;
#endif // __cplusplus

/**
 * Result of a C API call. Zero is success; every other value names the
 * failure class, with the detail message available via
 * [`unlearn_dp_last_error`].
 */
enum UnlearnDpStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  UNLEARN_DP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  UNLEARN_DP_STATUS_NULL_POINTER = 1,
  /**
   * An argument was outside its documented domain.
   */
  UNLEARN_DP_STATUS_INVALID_PARAMETER = 2,
  /**
   * The requested operation is undefined in the given capacity regime.
   */
  UNLEARN_DP_STATUS_REGIME_MISMATCH = 3,
  UNLEARN_DP_STATUS_EMPTY_DATASET = 4,
  /**
   * A buffer or vector length disagreed with the expected dimension.
   */
  UNLEARN_DP_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * The cumulative deletion set would exceed the certified capacity.
   */
  UNLEARN_DP_STATUS_CAPACITY_EXCEEDED = 6,
  /**
   * Deletion requests overlapped where disjointness is required.
   */
  UNLEARN_DP_STATUS_OVERLAPPING_REQUESTS = 7,
  /**
   * An index referenced a sample outside the dataset.
   */
  UNLEARN_DP_STATUS_INDEX_OUT_OF_RANGE = 8,
  /**
   * The data was degenerate (for example a zero marginal).
   */
  UNLEARN_DP_STATUS_DEGENERATE_DATA = 9,
  /**
   * Not enough data to complete the computation.
   */
  UNLEARN_DP_STATUS_INSUFFICIENT_DATA = 10,
  /**
   * Filesystem or serialization failure.
   */
  UNLEARN_DP_STATUS_IO = 11,
  /**
   * An internal invariant failed; report this as a bug.
   */
  UNLEARN_DP_STATUS_INTERNAL = 12,
};
#ifndef __cplusplus
typedef int32_t UnlearnDpStatus;
#endif // __cplusplus

/**
 * An in-memory training set (opaque). Create with
 * [`unlearn_dp_dataset_generate`] or [`unlearn_dp_dataset_from_flat`],
 * release with [`unlearn_dp_dataset_free`].
 */
typedef struct UnlearnDpDataset UnlearnDpDataset;

/**
 * A trained model together with its live deletion certificate (opaque).
 * Create with [`unlearn_dp_train`], release with
 * [`unlearn_dp_trained_model_free`].
 */
typedef struct UnlearnDpTrainedModel UnlearnDpTrainedModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buffer` (truncated
 * to `capacity - 1` bytes, always NUL-terminated when `capacity > 0`) and
 * returns the full message length in bytes, excluding the terminator.
 * Call with a null buffer or zero capacity to query the required size.
 * The message is reset by every other API call on the same thread.
 */
size_t unlearn_dp_last_error(char *buffer, size_t capacity);

/**
 * Returns the library version as a static NUL-terminated string; never
 * null, never freed by the caller.
 */
const char *unlearn_dp_version(void);

/**
 * Converts a ρ-zCDP guarantee to the (ε, δ) it implies at the given δ:
 * ε = ρ + 2·sqrt(ρ·ln(1/δ)).
 */
UnlearnDpStatus unlearn_dp_zcdp_to_dp(double rho, double delta, double *out_epsilon);

/**
 * Largest per-release ρ such that a group of `m` deletions still meets the
 * (ε, δ) target; the inverse of composing [`unlearn_dp_zcdp_to_dp`] with
 * group privacy at order `m`.
 */
UnlearnDpStatus unlearn_dp_rho_for_target(double epsilon,
                                          double delta,
                                          uint32_t m,
                                          double *out_rho);

/**
 * Group privacy for zCDP: a ρ guarantee for neighbors differing in one
 * sample implies k²·ρ for neighbors differing in k samples.
 */
UnlearnDpStatus unlearn_dp_group_zcdp(uint32_t k, double rho, double *out_rho);

/**
 * Budget consumed by k adaptively chained (ε, δ)-DP steps:
 * (k·ε, δ·(e^{kε} − 1)/(e^ε − 1)), with the output δ clamped to 1.
 */
UnlearnDpStatus unlearn_dp_chain_budget(uint32_t k,
                                        double epsilon,
                                        double delta,
                                        double *out_epsilon,
                                        double *out_delta);

/**
 * Advanced grouposition of k independent (ε, δ)-DP algorithms at slack
 * δ′: ε_out = kε²/2 + ε·sqrt(2k·ln(1/δ′)), δ_out = δ′ + kδ (clamped to 1).
 */
UnlearnDpStatus unlearn_dp_grouposition_budget(uint32_t k,
                                               double epsilon,
                                               double delta,
                                               double delta_prime,
                                               double *out_epsilon,
                                               double *out_delta);

/**
 * Certified deletion capacity for a dataset of n samples in d dimensions
 * at excess-risk level `alpha` under an (ε, δ) budget, in the given
 * regime. `constant` scales the rate (pass 1 for the plain bound),
 * `lipschitz` is the loss's Lipschitz bound, and `strong_convexity` is
 * consulted only by `UNLEARN_DP_REGIME_PURE_CONVEX_FLOOR`; pass NaN or a
 * non-positive value to leave it unset. The result is clamped to [0, n].
 */
UnlearnDpStatus unlearn_dp_deletion_capacity(int32_t regime,
                                             uint64_t n,
                                             uint64_t d,
                                             double alpha,
                                             double epsilon,
                                             double delta,
                                             double constant,
                                             double lipschitz,
                                             double strong_convexity,
                                             uint64_t *out_capacity);

/**
 * Exact (analytic) ε of the Gaussian mechanism with the given L2
 * sensitivity and noise scale σ at privacy parameter δ.
 */
UnlearnDpStatus unlearn_dp_analytic_gaussian_epsilon(double sensitivity,
                                                     double sigma,
                                                     double delta,
                                                     double *out_epsilon);

/**
 * Samples an n-point, d-dimensional scaled-hypercube training set
 * (coordinates ±1/sqrt(d)) with positive-sign probability `bias` per
 * coordinate. Pass NaN for the default bias of 0.75. On success the new
 * handle is written to `out_dataset` and owned by the caller.
 */
UnlearnDpStatus unlearn_dp_dataset_generate(size_t n,
                                            size_t d,
                                            uint64_t seed,
                                            double bias,
                                            struct UnlearnDpDataset **out_dataset);

/**
 * Wraps caller-provided data (row-major, n rows by d columns, so exactly
 * n·d doubles) as a dataset. The values are copied; the caller keeps
 * ownership of `values` and owns the returned handle.
 */
UnlearnDpStatus unlearn_dp_dataset_from_flat(const double *values,
                                             size_t n,
                                             size_t d,
                                             struct UnlearnDpDataset **out_dataset);

/**
 * Number of samples in the dataset; 0 if the handle is null.
 */
size_t unlearn_dp_dataset_len(const struct UnlearnDpDataset *dataset);

/**
 * Dimension of each sample; 0 if the handle is null.
 */
size_t unlearn_dp_dataset_dim(const struct UnlearnDpDataset *dataset);

/**
 * Writes the dataset's one-way marginal (the coordinatewise mean) into
 * `out_marginal`, which must hold at least `dim` doubles.
 */
UnlearnDpStatus unlearn_dp_dataset_marginal(const struct UnlearnDpDataset *dataset,
                                            double *out_marginal,
                                            size_t capacity);

/**
 * Releases a dataset handle. Null is a no-op. The handle must not be used
 * afterwards.
 */
void unlearn_dp_dataset_free(struct UnlearnDpDataset *dataset);

/**
 * Trains the private mean-release learner on `dataset`, calibrated so the
 * release plus up to `m` certified deletions stays (ε, δ)-indistinguishable
 * from retraining. `alpha` is the excess-risk level recorded in the
 * certificate, `regime` the capacity regime it cites, and `pad_to` an
 * optional size lift (0 to disable) that keeps the noise scale fixed when
 * comparing datasets of different sizes. On success the caller owns the
 * handle written to `out_trained`.
 */
UnlearnDpStatus unlearn_dp_train(const struct UnlearnDpDataset *dataset,
                                 double epsilon,
                                 double delta,
                                 size_t m,
                                 double alpha,
                                 int32_t regime,
                                 size_t pad_to,
                                 uint64_t seed,
                                 struct UnlearnDpTrainedModel **out_trained);

/**
 * Dimension of the trained parameter vector; 0 if the handle is null.
 */
size_t unlearn_dp_trained_model_dim(const struct UnlearnDpTrainedModel *trained);

/**
 * Copies the trained parameters into `out_params`, which must hold at
 * least `unlearn_dp_trained_model_dim` doubles.
 */
UnlearnDpStatus unlearn_dp_trained_model_params(const struct UnlearnDpTrainedModel *trained,
                                                double *out_params,
                                                size_t capacity);

/**
 * The zCDP budget ρ actually spent by training; NaN if the handle is null.
 */
double unlearn_dp_trained_model_rho(const struct UnlearnDpTrainedModel *trained);

/**
 * Total certified deletion capacity; 0 if the handle is null.
 */
size_t unlearn_dp_trained_model_capacity(const struct UnlearnDpTrainedModel *trained);

/**
 * Deletions still covered by the certificate; 0 if the handle is null.
 */
size_t unlearn_dp_trained_model_remaining(const struct UnlearnDpTrainedModel *trained);

/**
 * Processes one deletion request (`indices`, `count` entries) against the
 * trained model. Deletion is lazy: the certificate is debited and the
 * parameters are unchanged, which the calibration already accounts for.
 * Re-deleting an index consumes no extra capacity. Fails with
 * `UNLEARN_DP_STATUS_CAPACITY_EXCEEDED` when the cumulative deleted set
 * would pass the certified capacity, leaving the handle untouched.
 */
UnlearnDpStatus unlearn_dp_unlearn(struct UnlearnDpTrainedModel *trained,
                                   const size_t *indices,
                                   size_t count);

/**
 * Releases a trained-model handle. Null is a no-op. The handle must not
 * be used afterwards.
 */
void unlearn_dp_trained_model_free(struct UnlearnDpTrainedModel *trained);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNLEARN_DP_H */
