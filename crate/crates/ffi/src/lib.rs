//! C ABI over the unlearn-dp toolkit.
//!
//! Design rules, uniform across the surface:
//!
//! - Every fallible call returns an [`UnlearnDpStatus`]; `UNLEARN_DP_STATUS_OK`
//!   (0) means every output parameter was written. On any other status the
//!   outputs are untouched and [`unlearn_dp_last_error`] returns a
//!   human-readable reason for the calling thread.
//! - Heap objects cross the boundary as opaque handles
//!   ([`UnlearnDpDataset`], [`UnlearnDpTrainedModel`]) created and released
//!   by paired `_new`/`_free` style calls. Handles are not thread-safe;
//!   guard shared use externally.
//! - Null checks cover every pointer argument, and Rust panics are caught
//!   at the boundary and reported as `UNLEARN_DP_STATUS_INTERNAL` instead
//!   of unwinding into C.
//!
//! The matching header lives at `include/unlearn_dp.h` and is regenerated
//! by the build script via cbindgen.

// Pointer contracts are spelled out in each function's documentation (and
// therefore in the generated header), where C callers actually read them.
#![allow(clippy::missing_safety_doc)]
// C entry points take flat argument lists by design.
#![allow(clippy::too_many_arguments)]

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use unlearn_dp::accountant::{
    chain_budget, deletion_capacity, group_zcdp, grouposition_budget, rho_for_target, zcdp_to_dp,
    ApproxDpBudget, CapacityQuery, CapacityRegime, ZcdpBudget,
};
use unlearn_dp::audit::analytic_gaussian_epsilon;
use unlearn_dp::hardinstance::{gen_hard_dataset, one_way_marginal, Dataset};
use unlearn_dp::trainer::Model;
use unlearn_dp::unlearning::{
    learn_with, unlearn_lazy, DeletionRequest, MeanReleaseLearner, SideInformation,
    UnlearningCertificate,
};
use unlearn_dp::Error;

/// Result of a C API call. Zero is success; every other value names the
/// failure class, with the detail message available via
/// [`unlearn_dp_last_error`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnDpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was outside its documented domain.
    InvalidParameter = 2,
    /// The requested operation is undefined in the given capacity regime.
    RegimeMismatch = 3,
    EmptyDataset = 4,
    /// A buffer or vector length disagreed with the expected dimension.
    DimensionMismatch = 5,
    /// The cumulative deletion set would exceed the certified capacity.
    CapacityExceeded = 6,
    /// Deletion requests overlapped where disjointness is required.
    OverlappingRequests = 7,
    /// An index referenced a sample outside the dataset.
    IndexOutOfRange = 8,
    /// The data was degenerate (for example a zero marginal).
    DegenerateData = 9,
    /// Not enough data to complete the computation.
    InsufficientData = 10,
    /// Filesystem or serialization failure.
    Io = 11,
    /// An internal invariant failed; report this as a bug.
    Internal = 12,
}

/// Deletion-capacity regime selector. Pass as the `regime` argument of
/// [`unlearn_dp_deletion_capacity`] and [`unlearn_dp_train`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnDpRegime {
    /// Smooth convex losses under (ε, δ) budgets: the supported lower bound.
    ApproxConvexFloor = 0,
    /// Matching upper bound for the same class.
    ApproxConvexCeiling = 1,
    /// Strongly convex losses under (ε, δ) budgets.
    ApproxStronglyConvex = 2,
    /// Smooth convex losses under pure ε budgets (δ must be 0).
    PureConvexFloor = 3,
    /// Matching upper bound for pure ε budgets.
    PureConvexCeiling = 4,
}

/// An in-memory training set (opaque). Create with
/// [`unlearn_dp_dataset_generate`] or [`unlearn_dp_dataset_from_flat`],
/// release with [`unlearn_dp_dataset_free`].
pub struct UnlearnDpDataset {
    inner: Dataset,
}

/// A trained model together with its live deletion certificate (opaque).
/// Create with [`unlearn_dp_train`], release with
/// [`unlearn_dp_trained_model_free`].
pub struct UnlearnDpTrainedModel {
    model: Model,
    certificate: UnlearningCertificate,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().clear());
}

fn status_for(err: &Error) -> UnlearnDpStatus {
    match err {
        Error::InvalidParameter(_) => UnlearnDpStatus::InvalidParameter,
        Error::RegimeMismatch(_) => UnlearnDpStatus::RegimeMismatch,
        Error::EmptyDataset => UnlearnDpStatus::EmptyDataset,
        Error::DimensionMismatch { .. } => UnlearnDpStatus::DimensionMismatch,
        Error::DegenerateDataset(_) | Error::DegenerateDistribution(_) => {
            UnlearnDpStatus::DegenerateData
        }
        Error::CapacityExceeded { .. } => UnlearnDpStatus::CapacityExceeded,
        Error::OverlappingRequests(_) => UnlearnDpStatus::OverlappingRequests,
        Error::IndexOutOfRange { .. } => UnlearnDpStatus::IndexOutOfRange,
        Error::InsufficientData(_) => UnlearnDpStatus::InsufficientData,
        Error::Io(_) | Error::Parse(_) => UnlearnDpStatus::Io,
        Error::Mechanism { .. } => UnlearnDpStatus::Internal,
    }
}

fn fail(err: Error) -> UnlearnDpStatus {
    let status = status_for(&err);
    set_last_error(err.to_string());
    status
}

fn null_pointer(what: &str) -> UnlearnDpStatus {
    set_last_error(format!("{what} must not be null"));
    UnlearnDpStatus::NullPointer
}

/// Runs a boundary closure with panic containment: a Rust panic becomes
/// `UNLEARN_DP_STATUS_INTERNAL` instead of undefined behavior in C.
fn guarded(f: impl FnOnce() -> UnlearnDpStatus) -> UnlearnDpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {detail}"));
            UnlearnDpStatus::Internal
        }
    }
}

fn regime_from_code(code: i32) -> Result<CapacityRegime, Error> {
    match code {
        0 => Ok(CapacityRegime::ApproxConvexFloor),
        1 => Ok(CapacityRegime::ApproxConvexCeiling),
        2 => Ok(CapacityRegime::ApproxStronglyConvex),
        3 => Ok(CapacityRegime::PureConvexFloor),
        4 => Ok(CapacityRegime::PureConvexCeiling),
        other => Err(Error::InvalidParameter(format!(
            "regime code {other} is not one of the UnlearnDpRegime values 0..=4"
        ))),
    }
}

/// Copies the calling thread's last error message into `buffer` (truncated
/// to `capacity - 1` bytes, always NUL-terminated when `capacity > 0`) and
/// returns the full message length in bytes, excluding the terminator.
/// Call with a null buffer or zero capacity to query the required size.
/// The message is reset by every other API call on the same thread.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            // SAFETY: the caller promises `buffer` points to `capacity`
            // writable bytes; we write at most `capacity` of them.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
                *buffer.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Returns the library version as a static NUL-terminated string; never
/// null, never freed by the caller.
#[no_mangle]
pub extern "C" fn unlearn_dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Privacy accounting (pure functions)
// ---------------------------------------------------------------------------

/// Converts a ρ-zCDP guarantee to the (ε, δ) it implies at the given δ:
/// ε = ρ + 2·sqrt(ρ·ln(1/δ)).
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_zcdp_to_dp(
    rho: f64,
    delta: f64,
    out_epsilon: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_epsilon.is_null() {
            return null_pointer("out_epsilon");
        }
        let budget = match ZcdpBudget::new(rho).and_then(|b| zcdp_to_dp(b, delta)) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        unsafe { *out_epsilon = budget.epsilon() };
        UnlearnDpStatus::Ok
    })
}

/// Largest per-release ρ such that a group of `m` deletions still meets the
/// (ε, δ) target; the inverse of composing [`unlearn_dp_zcdp_to_dp`] with
/// group privacy at order `m`.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_rho_for_target(
    epsilon: f64,
    delta: f64,
    m: u32,
    out_rho: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_rho.is_null() {
            return null_pointer("out_rho");
        }
        let rho = match ApproxDpBudget::new(epsilon, delta).and_then(|t| rho_for_target(t, m)) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        unsafe { *out_rho = rho.rho() };
        UnlearnDpStatus::Ok
    })
}

/// Group privacy for zCDP: a ρ guarantee for neighbors differing in one
/// sample implies k²·ρ for neighbors differing in k samples.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_group_zcdp(
    k: u32,
    rho: f64,
    out_rho: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_rho.is_null() {
            return null_pointer("out_rho");
        }
        let grouped = match ZcdpBudget::new(rho).and_then(|b| group_zcdp(k, b)) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        unsafe { *out_rho = grouped.rho() };
        UnlearnDpStatus::Ok
    })
}

/// Budget consumed by k adaptively chained (ε, δ)-DP steps:
/// (k·ε, δ·(e^{kε} − 1)/(e^ε − 1)), with the output δ clamped to 1.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_chain_budget(
    k: u32,
    epsilon: f64,
    delta: f64,
    out_epsilon: *mut f64,
    out_delta: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_epsilon.is_null() || out_delta.is_null() {
            return null_pointer("out_epsilon/out_delta");
        }
        let total = match ApproxDpBudget::new(epsilon, delta).and_then(|per| chain_budget(k, per)) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        unsafe {
            *out_epsilon = total.epsilon();
            *out_delta = total.delta();
        }
        UnlearnDpStatus::Ok
    })
}

/// Advanced grouposition of k independent (ε, δ)-DP algorithms at slack
/// δ′: ε_out = kε²/2 + ε·sqrt(2k·ln(1/δ′)), δ_out = δ′ + kδ (clamped to 1).
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_grouposition_budget(
    k: u32,
    epsilon: f64,
    delta: f64,
    delta_prime: f64,
    out_epsilon: *mut f64,
    out_delta: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_epsilon.is_null() || out_delta.is_null() {
            return null_pointer("out_epsilon/out_delta");
        }
        let total = match ApproxDpBudget::new(epsilon, delta)
            .and_then(|per| grouposition_budget(k, per, delta_prime))
        {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        unsafe {
            *out_epsilon = total.epsilon();
            *out_delta = total.delta();
        }
        UnlearnDpStatus::Ok
    })
}

/// Certified deletion capacity for a dataset of n samples in d dimensions
/// at excess-risk level `alpha` under an (ε, δ) budget, in the given
/// regime. `constant` scales the rate (pass 1 for the plain bound),
/// `lipschitz` is the loss's Lipschitz bound, and `strong_convexity` is
/// consulted only by `UNLEARN_DP_REGIME_PURE_CONVEX_FLOOR`; pass NaN or a
/// non-positive value to leave it unset. The result is clamped to [0, n].
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_deletion_capacity(
    regime: i32,
    n: u64,
    d: u64,
    alpha: f64,
    epsilon: f64,
    delta: f64,
    constant: f64,
    lipschitz: f64,
    strong_convexity: f64,
    out_capacity: *mut u64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_capacity.is_null() {
            return null_pointer("out_capacity");
        }
        let result = regime_from_code(regime).and_then(|regime| {
            let budget = ApproxDpBudget::new(epsilon, delta)?;
            let mut query = CapacityQuery::new(regime, n, d, alpha, budget).with_constant(constant);
            if lipschitz.is_finite() && lipschitz > 0.0 {
                query = query.with_lipschitz(lipschitz);
            }
            if strong_convexity.is_finite() && strong_convexity > 0.0 {
                query = query.with_strong_convexity(strong_convexity);
            }
            deletion_capacity(&query)
        });
        match result {
            Ok(capacity) => {
                unsafe { *out_capacity = capacity };
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Exact (analytic) ε of the Gaussian mechanism with the given L2
/// sensitivity and noise scale σ at privacy parameter δ.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_analytic_gaussian_epsilon(
    sensitivity: f64,
    sigma: f64,
    delta: f64,
    out_epsilon: *mut f64,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_epsilon.is_null() {
            return null_pointer("out_epsilon");
        }
        match analytic_gaussian_epsilon(sensitivity, sigma, delta) {
            Ok(eps) => {
                unsafe { *out_epsilon = eps };
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Dataset handles
// ---------------------------------------------------------------------------

/// Samples an n-point, d-dimensional scaled-hypercube training set
/// (coordinates ±1/sqrt(d)) with positive-sign probability `bias` per
/// coordinate. Pass NaN for the default bias of 0.75. On success the new
/// handle is written to `out_dataset` and owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_generate(
    n: usize,
    d: usize,
    seed: u64,
    bias: f64,
    out_dataset: *mut *mut UnlearnDpDataset,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_dataset.is_null() {
            return null_pointer("out_dataset");
        }
        let bias = if bias.is_nan() { None } else { Some(bias) };
        match gen_hard_dataset(n, d, seed, bias) {
            Ok(dataset) => {
                let handle = Box::new(UnlearnDpDataset { inner: dataset });
                unsafe { *out_dataset = Box::into_raw(handle) };
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Wraps caller-provided data (row-major, n rows by d columns, so exactly
/// n·d doubles) as a dataset. The values are copied; the caller keeps
/// ownership of `values` and owns the returned handle.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_from_flat(
    values: *const f64,
    n: usize,
    d: usize,
    out_dataset: *mut *mut UnlearnDpDataset,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_dataset.is_null() {
            return null_pointer("out_dataset");
        }
        if values.is_null() {
            return null_pointer("values");
        }
        let Some(len) = n.checked_mul(d) else {
            return fail(Error::InvalidParameter(format!(
                "dataset shape {n} x {d} overflows"
            )));
        };
        // SAFETY: the caller promises `values` points to n·d readable doubles.
        let data = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        match Dataset::from_flat(data, d) {
            Ok(dataset) => {
                let handle = Box::new(UnlearnDpDataset { inner: dataset });
                unsafe { *out_dataset = Box::into_raw(handle) };
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of samples in the dataset; 0 if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_len(dataset: *const UnlearnDpDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { &*dataset }.inner.n()
}

/// Dimension of each sample; 0 if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_dim(dataset: *const UnlearnDpDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { &*dataset }.inner.dim()
}

/// Writes the dataset's one-way marginal (the coordinatewise mean) into
/// `out_marginal`, which must hold at least `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_marginal(
    dataset: *const UnlearnDpDataset,
    out_marginal: *mut f64,
    capacity: usize,
) -> UnlearnDpStatus {
    guarded(|| {
        if dataset.is_null() {
            return null_pointer("dataset");
        }
        if out_marginal.is_null() {
            return null_pointer("out_marginal");
        }
        let dataset = unsafe { &*dataset };
        let d = dataset.inner.dim();
        if capacity < d {
            return fail(Error::DimensionMismatch {
                expected: d,
                got: capacity,
            });
        }
        match one_way_marginal(&dataset.inner) {
            Ok(marginal) => {
                // SAFETY: capacity ≥ d was checked above.
                unsafe {
                    std::ptr::copy_nonoverlapping(marginal.as_ptr(), out_marginal, d);
                }
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a dataset handle. Null is a no-op. The handle must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_dataset_free(dataset: *mut UnlearnDpDataset) {
    if !dataset.is_null() {
        // SAFETY: the handle came from Box::into_raw in this module and is
        // released exactly once by contract.
        drop(unsafe { Box::from_raw(dataset) });
    }
}

// ---------------------------------------------------------------------------
// Training and unlearning handles
// ---------------------------------------------------------------------------

/// Trains the private mean-release learner on `dataset`, calibrated so the
/// release plus up to `m` certified deletions stays (ε, δ)-indistinguishable
/// from retraining. `alpha` is the excess-risk level recorded in the
/// certificate, `regime` the capacity regime it cites, and `pad_to` an
/// optional size lift (0 to disable) that keeps the noise scale fixed when
/// comparing datasets of different sizes. On success the caller owns the
/// handle written to `out_trained`.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_train(
    dataset: *const UnlearnDpDataset,
    epsilon: f64,
    delta: f64,
    m: usize,
    alpha: f64,
    regime: i32,
    pad_to: usize,
    seed: u64,
    out_trained: *mut *mut UnlearnDpTrainedModel,
) -> UnlearnDpStatus {
    guarded(|| {
        if out_trained.is_null() {
            return null_pointer("out_trained");
        }
        if dataset.is_null() {
            return null_pointer("dataset");
        }
        let dataset = unsafe { &*dataset };
        let result = regime_from_code(regime).and_then(|regime| {
            let target = ApproxDpBudget::new(epsilon, delta)?;
            let mut learner = MeanReleaseLearner::new();
            if pad_to > 0 {
                learner = learner.with_pad_to(pad_to);
            }
            learn_with(&learner, &dataset.inner, target, m, alpha, regime, seed)
        });
        match result {
            Ok((model, certificate)) => {
                let handle = Box::new(UnlearnDpTrainedModel { model, certificate });
                unsafe { *out_trained = Box::into_raw(handle) };
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Dimension of the trained parameter vector; 0 if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_dim(
    trained: *const UnlearnDpTrainedModel,
) -> usize {
    if trained.is_null() {
        return 0;
    }
    unsafe { &*trained }.model.dimension
}

/// Copies the trained parameters into `out_params`, which must hold at
/// least `unlearn_dp_trained_model_dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_params(
    trained: *const UnlearnDpTrainedModel,
    out_params: *mut f64,
    capacity: usize,
) -> UnlearnDpStatus {
    guarded(|| {
        if trained.is_null() {
            return null_pointer("trained");
        }
        if out_params.is_null() {
            return null_pointer("out_params");
        }
        let trained = unsafe { &*trained };
        let d = trained.model.params.len();
        if capacity < d {
            return fail(Error::DimensionMismatch {
                expected: d,
                got: capacity,
            });
        }
        // SAFETY: capacity ≥ d was checked above.
        unsafe {
            std::ptr::copy_nonoverlapping(trained.model.params.as_ptr(), out_params, d);
        }
        UnlearnDpStatus::Ok
    })
}

/// The zCDP budget ρ actually spent by training; NaN if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_rho(
    trained: *const UnlearnDpTrainedModel,
) -> f64 {
    if trained.is_null() {
        return f64::NAN;
    }
    unsafe { &*trained }.model.rho
}

/// Total certified deletion capacity; 0 if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_capacity(
    trained: *const UnlearnDpTrainedModel,
) -> usize {
    if trained.is_null() {
        return 0;
    }
    unsafe { &*trained }.certificate.capacity()
}

/// Deletions still covered by the certificate; 0 if the handle is null.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_remaining(
    trained: *const UnlearnDpTrainedModel,
) -> usize {
    if trained.is_null() {
        return 0;
    }
    unsafe { &*trained }.certificate.remaining()
}

/// Processes one deletion request (`indices`, `count` entries) against the
/// trained model. Deletion is lazy: the certificate is debited and the
/// parameters are unchanged, which the calibration already accounts for.
/// Re-deleting an index consumes no extra capacity. Fails with
/// `UNLEARN_DP_STATUS_CAPACITY_EXCEEDED` when the cumulative deleted set
/// would pass the certified capacity, leaving the handle untouched.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_unlearn(
    trained: *mut UnlearnDpTrainedModel,
    indices: *const usize,
    count: usize,
) -> UnlearnDpStatus {
    guarded(|| {
        if trained.is_null() {
            return null_pointer("trained");
        }
        if indices.is_null() && count > 0 {
            return null_pointer("indices");
        }
        let trained = unsafe { &mut *trained };
        // SAFETY: the caller promises `indices` points to `count` readable
        // entries; count == 0 is allowed with a null pointer.
        let request = if count == 0 {
            DeletionRequest::new(Vec::new())
        } else {
            DeletionRequest::new(unsafe { std::slice::from_raw_parts(indices, count) }.to_vec())
        };
        match unlearn_lazy(
            &request,
            &trained.model,
            &SideInformation,
            &mut trained.certificate,
        ) {
            Ok(updated) => {
                trained.model = updated;
                UnlearnDpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a trained-model handle. Null is a no-op. The handle must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn unlearn_dp_trained_model_free(trained: *mut UnlearnDpTrainedModel) {
    if !trained.is_null() {
        // SAFETY: the handle came from Box::into_raw in this module and is
        // released exactly once by contract.
        drop(unsafe { Box::from_raw(trained) });
    }
}
