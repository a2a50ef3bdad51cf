//! Deletion-aware training: a private learner paired with a lazy unlearner.
//!
//! The pair works as follows: `learn` trains once under a zCDP budget chosen
//! so that the *training* output is already indistinguishable from retraining
//! on any dataset that differs in up to `m` points. Deleting then requires no
//! computation at all — [`unlearn_lazy`] returns the model bitwise unchanged
//! and only debits the deletion against the certificate. The certificate is a
//! mutable ledger: once the cumulative set of deleted indices would exceed the
//! certified capacity, further deletions are refused and the pair must be
//! retrained.
//!
//! The module also provides the retrain-from-scratch baseline that audits
//! compare against, post-processing (any dataset-independent map keeps the
//! certificate), and sequential chaining of disjoint deletion requests with
//! the composed budget from [`crate::accountant::chain_budget`].

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::accountant::{chain_budget, rho_for_target, ApproxDpBudget, CapacityRegime, ZcdpBudget};
use crate::error::{Error, Result};
use crate::hardinstance::{hypercube_coord, pad_dataset, Dataset};
use crate::trainer::{
    gaussian_mean_release, noisy_gd, Convexity, LossSpec, Model, StepSize, TrainerConfig,
};

/// A set of positions in the training dataset to delete. Duplicate indices
/// collapse; requests carry no payload beyond the index set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeletionRequest {
    indices: BTreeSet<usize>,
}

impl DeletionRequest {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        DeletionRequest {
            indices: indices.into_iter().collect(),
        }
    }

    /// The request that deletes nothing.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }
}

impl FromIterator<usize> for DeletionRequest {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// The auxiliary state the unlearner is allowed to consult. For the lazy
/// pair this is deliberately *empty*: it carries no dataset-dependent bits,
/// which is what makes the deletion free of information flow. Serialization
/// is a fixed constant regardless of the dataset it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SideInformation;

impl SideInformation {
    /// Derive side information from a training set. The input is ignored by
    /// construction; the signature exists so call sites read like the general
    /// learn/unlearn interface.
    pub fn derive(_dataset: &Dataset) -> Self {
        SideInformation
    }

    /// Constant byte encoding (empty), identical for every dataset.
    pub fn to_bytes(&self) -> &'static [u8] {
        &[]
    }
}

/// The contract attached to a trained model: the (ε, δ) indistinguishability
/// guarantee, how many deletions it covers, and the running ledger of indices
/// already deleted. `record` refuses any update that would take the
/// cumulative deleted set past the capacity, at which point the pair is
/// spent and must be retrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearningCertificate {
    epsilon: f64,
    delta: f64,
    capacity: usize,
    regime: CapacityRegime,
    alpha: f64,
    lazy: bool,
    dataset_size: usize,
    deleted: BTreeSet<usize>,
}

impl UnlearningCertificate {
    pub fn new(
        budget: ApproxDpBudget,
        capacity: usize,
        regime: CapacityRegime,
        alpha: f64,
        dataset_size: usize,
    ) -> Self {
        UnlearningCertificate {
            epsilon: budget.epsilon(),
            delta: budget.delta(),
            capacity,
            regime,
            alpha,
            lazy: true,
            dataset_size,
            deleted: BTreeSet::new(),
        }
    }

    pub fn budget(&self) -> ApproxDpBudget {
        ApproxDpBudget::new(self.epsilon, self.delta)
            .expect("certificate budgets are validated on construction")
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn regime(&self) -> CapacityRegime {
        self.regime
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_lazy(&self) -> bool {
        self.lazy
    }

    pub fn dataset_size(&self) -> usize {
        self.dataset_size
    }

    /// Indices deleted so far (the union over all recorded requests).
    pub fn deleted(&self) -> &BTreeSet<usize> {
        &self.deleted
    }

    /// How many further distinct indices may still be deleted.
    pub fn remaining(&self) -> usize {
        self.capacity.saturating_sub(self.deleted.len())
    }

    /// Debit a request against the ledger. Deleting the same index twice
    /// consumes capacity once (the ledger tracks the union). On error the
    /// certificate is left unchanged.
    pub fn record(&mut self, request: &DeletionRequest) -> Result<()> {
        for &i in request.indices() {
            if i >= self.dataset_size {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: self.dataset_size,
                });
            }
        }
        let total = self.deleted.union(request.indices()).count();
        if total > self.capacity {
            return Err(Error::capacity(self.capacity, total));
        }
        self.deleted.extend(request.indices());
        Ok(())
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        let cert: UnlearningCertificate = serde_json::from_str(&s)?;
        if let Some(&max) = cert.deleted.iter().next_back() {
            if max >= cert.dataset_size {
                return Err(Error::Parse(format!(
                    "certificate ledger contains index {max} outside dataset of size {}",
                    cert.dataset_size
                )));
            }
        }
        Ok(cert)
    }
}

/// A private training procedure usable on either side of an audit: the
/// original training run and the retrain-from-scratch baseline.
pub trait Learner: Send + Sync {
    /// Train on `dataset` spending `rho`, deterministically in `seed`.
    fn fit(&self, dataset: &Dataset, rho: ZcdpBudget, seed: u64) -> Result<Model>;

    /// Short name recorded in model fingerprints.
    fn describe(&self) -> String;
}

/// Pad a dataset up to `pad_to` points with balanced ±anchor pairs (anchor =
/// the all-plus scaled-hypercube vertex) so that mechanisms whose noise scale
/// depends on the dataset size keep a *fixed* scale across the original set
/// and any post-deletion remainder. Without the lift, retraining on n − k
/// points uses slightly larger noise than training on n, and the audit would
/// compare distributions that differ in variance as well as mean.
fn lift_dataset(dataset: &Dataset, pad_to: Option<usize>) -> Result<(Dataset, Option<usize>)> {
    match pad_to {
        None => Ok((dataset.clone(), None)),
        Some(target) => {
            if target < dataset.n() {
                return Err(Error::InvalidParameter(format!(
                    "pad_to = {target} is below the dataset size {}",
                    dataset.n()
                )));
            }
            if target == dataset.n() {
                return Ok((dataset.clone(), Some(target)));
            }
            let c = hypercube_coord(dataset.dim());
            let anchor = vec![c; dataset.dim()];
            Ok((pad_dataset(dataset, target, &anchor)?, Some(target)))
        }
    }
}

/// One-shot Gaussian release of the dataset mean, wrapped as a [`Learner`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanReleaseLearner {
    /// When set, train on the dataset padded to this size (see `lift_dataset`).
    pub pad_to: Option<usize>,
}

impl MeanReleaseLearner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_pad_to(mut self, pad_to: usize) -> Self {
        self.pad_to = Some(pad_to);
        self
    }
}

impl Learner for MeanReleaseLearner {
    fn fit(&self, dataset: &Dataset, rho: ZcdpBudget, seed: u64) -> Result<Model> {
        let (fitted, padded_to) = lift_dataset(dataset, self.pad_to)?;
        let params = gaussian_mean_release(&fitted, rho, seed)?;
        let mut model = Model::from_params(params, rho.rho(), seed, &self.describe());
        model.config.n = fitted.n();
        model.config.padded_to = padded_to;
        Ok(model)
    }

    fn describe(&self) -> String {
        "mean-release".into()
    }
}

/// Noisy projected gradient descent wrapped as a [`Learner`].
#[derive(Clone)]
pub struct GdLearner {
    pub loss: LossSpec,
    /// Iteration count; `None` means the trainer default (n²).
    pub steps: Option<usize>,
    pub step_size: StepSize,
    /// When set, train on the dataset padded to this size (see `lift_dataset`).
    pub pad_to: Option<usize>,
}

impl GdLearner {
    pub fn new(loss: LossSpec) -> Self {
        GdLearner {
            loss,
            steps: None,
            step_size: StepSize::Auto,
            pad_to: None,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn with_step_size(mut self, step_size: StepSize) -> Self {
        self.step_size = step_size;
        self
    }

    pub fn with_pad_to(mut self, pad_to: usize) -> Self {
        self.pad_to = Some(pad_to);
        self
    }
}

impl Learner for GdLearner {
    fn fit(&self, dataset: &Dataset, rho: ZcdpBudget, seed: u64) -> Result<Model> {
        let (fitted, padded_to) = lift_dataset(dataset, self.pad_to)?;
        let mut config = TrainerConfig::new(rho, seed).with_step_size(self.step_size);
        if let Some(steps) = self.steps {
            config = config.with_steps(steps);
        }
        let mut model = noisy_gd(&fitted, &self.loss, &config)?;
        model.config.padded_to = padded_to;
        Ok(model)
    }

    fn describe(&self) -> String {
        "noisy-gd".into()
    }
}

/// The capacity regime a loss shape certifies under (δ > 0 training).
fn regime_for(convexity: Convexity) -> CapacityRegime {
    match convexity {
        Convexity::Linear | Convexity::Convex => CapacityRegime::ApproxConvexFloor,
        Convexity::StronglyConvex(_) => CapacityRegime::ApproxStronglyConvex,
    }
}

/// Train with any [`Learner`] under a budget calibrated so the output already
/// covers `m` deletions: the spent zCDP is `rho_for_target(target, m)`, i.e.
/// the (ε, δ) target holds between datasets differing in up to m points.
/// Returns the model together with a fresh capacity-`m` certificate.
pub fn learn_with<L: Learner + ?Sized>(
    learner: &L,
    dataset: &Dataset,
    target: ApproxDpBudget,
    m: usize,
    alpha: f64,
    regime: CapacityRegime,
    seed: u64,
) -> Result<(Model, UnlearningCertificate)> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "deletion capacity m must be ≥ 1".into(),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy level alpha must be finite and positive, got {alpha}"
        )));
    }
    let m32 = u32::try_from(m)
        .map_err(|_| Error::InvalidParameter(format!("deletion capacity m = {m} is too large")))?;
    let rho = rho_for_target(target, m32)?;
    let model = learner.fit(dataset, rho, seed)?;
    let certificate = UnlearningCertificate::new(target, m, regime, alpha, dataset.n());
    Ok((model, certificate))
}

/// [`learn_with`] specialised to noisy gradient descent on `loss`, with the
/// regime inferred from the loss shape.
pub fn learn(
    dataset: &Dataset,
    loss: &LossSpec,
    target: ApproxDpBudget,
    m: usize,
    alpha: f64,
    seed: u64,
) -> Result<(Model, UnlearningCertificate)> {
    let learner = GdLearner::new(loss.clone());
    learn_with(
        &learner,
        dataset,
        target,
        m,
        alpha,
        regime_for(loss.convexity()),
        seed,
    )
}

/// Delete by doing nothing: returns the model bitwise unchanged after
/// debiting the request against the certificate. Fails — leaving both model
/// and certificate untouched — if any index is out of range or the cumulative
/// deleted set would exceed the certified capacity.
pub fn unlearn_lazy(
    request: &DeletionRequest,
    model: &Model,
    _side: &SideInformation,
    certificate: &mut UnlearningCertificate,
) -> Result<Model> {
    certificate.record(request)?;
    Ok(model.clone())
}

/// The comparison point for audits: drop the requested points and rerun the
/// full pipeline (train on the remainder, then a no-op deletion) with an
/// independent seed.
#[allow(clippy::too_many_arguments)] // mirrors learn_with plus the request
pub fn retrain_baseline_with<L: Learner + ?Sized>(
    learner: &L,
    dataset: &Dataset,
    request: &DeletionRequest,
    target: ApproxDpBudget,
    m: usize,
    alpha: f64,
    regime: CapacityRegime,
    seed: u64,
) -> Result<Model> {
    let remainder = dataset.remove_indices(request.indices())?;
    let (model, mut certificate) = learn_with(learner, &remainder, target, m, alpha, regime, seed)?;
    unlearn_lazy(
        &DeletionRequest::empty(),
        &model,
        &SideInformation,
        &mut certificate,
    )
}

/// [`retrain_baseline_with`] specialised to noisy gradient descent.
pub fn retrain_baseline(
    dataset: &Dataset,
    request: &DeletionRequest,
    loss: &LossSpec,
    target: ApproxDpBudget,
    m: usize,
    alpha: f64,
    seed: u64,
) -> Result<Model> {
    let learner = GdLearner::new(loss.clone());
    retrain_baseline_with(
        &learner,
        dataset,
        request,
        target,
        m,
        alpha,
        regime_for(loss.convexity()),
        seed,
    )
}

/// Apply a dataset-independent map to the released model. The certificate
/// travels unchanged: indistinguishability is closed under post-processing,
/// so (f(model), certificate) certifies exactly what (model, certificate)
/// did.
pub fn post_process<F: Fn(&Model) -> Model>(
    f: F,
    pair: (Model, UnlearningCertificate),
) -> (Model, UnlearningCertificate) {
    let (model, certificate) = pair;
    (f(&model), certificate)
}

/// Sequentially delete a list of pairwise-disjoint requests and report the
/// composed (ε, δ) budget for the whole chain. The model passes through
/// bitwise unchanged (each step is lazy); the certificate accumulates every
/// request, so the chain fails with `CapacityExceeded` as soon as the union
/// goes past the certified capacity, and with `OverlappingRequests` if any
/// index appears in two requests.
pub fn chain_unlearn(
    requests: &[DeletionRequest],
    model: &Model,
    side: &SideInformation,
    certificate: &mut UnlearningCertificate,
) -> Result<(Model, ApproxDpBudget)> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut shared: BTreeSet<usize> = BTreeSet::new();
    for request in requests {
        for &i in request.indices() {
            if !seen.insert(i) {
                shared.insert(i);
            }
        }
    }
    if !shared.is_empty() {
        return Err(Error::overlap(&shared));
    }
    let k = u32::try_from(requests.len()).map_err(|_| {
        Error::InvalidParameter(format!("chain length {} is too large", requests.len()))
    })?;
    // An empty chain performs no deletion and spends nothing; the accountant
    // only prices chains of length ≥ 1.
    let budget = if k == 0 {
        ApproxDpBudget::new(0.0, 0.0)?
    } else {
        chain_budget(k, certificate.budget())?
    };
    let mut current = model.clone();
    for request in requests {
        current = unlearn_lazy(request, &current, side, certificate)?;
    }
    Ok((current, budget))
}

/// One line of the on-disk deletion ledger (JSON Lines): which indices a
/// deletion removed, when, and how much capacity the certificate had left
/// afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub indices: Vec<usize>,
    /// Seconds since the Unix epoch at the time the deletion was recorded.
    pub timestamp: u64,
    pub remaining: usize,
}

impl LedgerRecord {
    pub fn new(request: &DeletionRequest, remaining: usize) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        LedgerRecord {
            indices: request.indices().iter().copied().collect(),
            timestamp,
            remaining,
        }
    }
}

/// Append one record to a JSON-Lines ledger file, creating it if needed.
pub fn append_ledger<P: AsRef<Path>>(path: P, record: &LedgerRecord) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let line = serde_json::to_string(record)?;
    writeln!(file, "{line}")?;
    Ok(())
}

/// Read every record of a JSON-Lines ledger file, in append order.
pub fn read_ledger<P: AsRef<Path>>(path: P) -> Result<Vec<LedgerRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}
