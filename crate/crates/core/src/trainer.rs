//! Private training mechanisms.
//!
//! Two learners live here. [`noisy_gd`] runs projected full-batch gradient
//! descent on the empirical loss, adding isotropic Gaussian noise to every
//! gradient so that the whole trajectory satisfies the requested ρ-zCDP
//! budget (per-step cost ρ/T composes additively). [`gaussian_mean_release`]
//! is the one-shot learner for the mean-statistic instance: release the
//! one-way marginal plus calibrated Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

use crate::accountant::{self, ZcdpBudget};
use crate::error::{Error, Result};
use crate::hardinstance::{self, Dataset};
use crate::numeric;

/// Curvature class of a loss; the strongly-convex modulus feeds capacity
/// queries, while `Linear` unlocks closed-form minimizers in evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    Linear,
    Convex,
    StronglyConvex(f64),
}

/// Per-point loss value: (parameters, sample) → loss.
type ValueFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
/// Per-point gradient, written into the caller's buffer:
/// (parameters, sample, out).
type GradientFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// An L-Lipschitz convex loss over the centered ball of diameter D, with
/// per-point value and gradient oracles. The gradient oracle writes into a
/// caller-provided buffer so the training loop allocates nothing per step.
#[derive(Clone)]
pub struct LossSpec {
    lipschitz: f64,
    diameter: f64,
    convexity: Convexity,
    value: ValueFn,
    gradient: GradientFn,
}

impl std::fmt::Debug for LossSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LossSpec")
            .field("lipschitz", &self.lipschitz)
            .field("diameter", &self.diameter)
            .field("convexity", &self.convexity)
            .finish_non_exhaustive()
    }
}

impl LossSpec {
    pub fn new(
        lipschitz: f64,
        diameter: f64,
        convexity: Convexity,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if !lipschitz.is_finite() || lipschitz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        if !diameter.is_finite() || diameter <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diameter must be positive, got {diameter}"
            )));
        }
        if let Convexity::StronglyConvex(m) = convexity {
            if !m.is_finite() || m <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "strong-convexity modulus must be positive, got {m}"
                )));
            }
        }
        Ok(LossSpec {
            lipschitz,
            diameter,
            convexity,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        })
    }

    /// The mean-statistic loss f(w, x) = −⟨w, x⟩ over the unit ball
    /// (diameter 2). On unit-norm points it is 1-Lipschitz.
    pub fn linear() -> Self {
        LossSpec::new(
            1.0,
            2.0,
            Convexity::Linear,
            |w, x| -numeric::dot(w, x),
            |_w, x, out| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -xi;
                }
            },
        )
        .expect("static parameters are valid")
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Radius of the parameter ball, D/2.
    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn value(&self, w: &[f64], x: &[f64]) -> f64 {
        (self.value)(w, x)
    }

    pub fn gradient_into(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        (self.gradient)(w, x, out)
    }

    /// Mean per-point loss over the dataset, summed exactly.
    pub fn empirical_value(&self, w: &[f64], data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(numeric::exact_sum(data.iter_points().map(|x| self.value(w, x))) / data.n() as f64)
    }

    /// Average per-point gradient, written into `out` (`scratch` must have
    /// the same length).
    pub fn batch_gradient_into(
        &self,
        w: &[f64],
        data: &Dataset,
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        out.fill(0.0);
        for x in data.iter_points() {
            (self.gradient)(w, x, scratch);
            for (o, g) in out.iter_mut().zip(scratch.iter()) {
                *o += g;
            }
        }
        let inv_n = 1.0 / data.n() as f64;
        for o in out.iter_mut() {
            *o *= inv_n;
        }
    }
}

/// Step-size schedule. `Auto` picks the constant D/(√T·(L + σ_step·√d)) —
/// the standard rate choice when gradients carry σ_step-scale noise — and
/// `Decaying(η₀)` uses η₀/√(t+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Constant(f64),
    Decaying(f64),
}

impl StepSize {
    pub fn describe(&self) -> String {
        match self {
            StepSize::Auto => "auto".into(),
            StepSize::Constant(eta) => format!("constant:{eta}"),
            StepSize::Decaying(eta0) => format!("decaying:{eta0}"),
        }
    }

    fn validate(&self) -> Result<()> {
        let eta = match self {
            StepSize::Auto => return Ok(()),
            StepSize::Constant(eta) => *eta,
            StepSize::Decaying(eta0) => *eta0,
        };
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step size must be finite and nonnegative, got {eta}"
            )));
        }
        Ok(())
    }
}

/// Training configuration. `steps = None` defaults to T = n², large enough
/// that optimization error is subdominant to the privacy noise.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub steps: Option<usize>,
    pub step_size: StepSize,
    pub rho: ZcdpBudget,
    pub seed: u64,
    /// Starting point; origin when `None`. Must lie inside the ball.
    pub init: Option<Vec<f64>>,
}

impl TrainerConfig {
    pub fn new(rho: ZcdpBudget, seed: u64) -> Self {
        TrainerConfig {
            steps: None,
            step_size: StepSize::Auto,
            rho,
            seed,
            init: None,
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

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }
}

/// How a model was produced: enough to reproduce or sanity-check it, and
/// the fingerprint recorded in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub learner: String,
    pub n: usize,
    pub steps: usize,
    pub step_size: String,
    /// Reference size the training set was padded to, when a size lift was
    /// applied before fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padded_to: Option<usize>,
}

/// A trained parameter vector with its spent privacy budget (ρ-zCDP; `null`
/// in JSON for the non-private sentinel) and provenance fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub dimension: usize,
    pub params: Vec<f64>,
    #[serde(with = "rho_serde")]
    pub rho: f64,
    pub seed: u64,
    pub config: ModelConfig,
}

mod rho_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rho: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if rho.is_finite() {
            s.serialize_some(rho)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Model {
    /// Wrap an externally produced parameter vector (e.g. a released mean)
    /// so it can flow through evaluation and audit pipelines.
    pub fn from_params(params: Vec<f64>, rho: f64, seed: u64, learner: &str) -> Self {
        Model {
            dimension: params.len(),
            config: ModelConfig {
                learner: learner.to_string(),
                n: 0,
                steps: 0,
                step_size: "none".into(),
                padded_to: None,
            },
            params,
            rho,
            seed,
        }
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        let m: Model = serde_json::from_str(&s)?;
        if m.params.len() != m.dimension {
            return Err(Error::Parse(format!(
                "model dimension {} does not match params length {}",
                m.dimension,
                m.params.len()
            )));
        }
        Ok(m)
    }
}

/// Euclidean projection onto the centered ball: w unchanged if inside,
/// radially scaled onto the boundary otherwise.
pub fn project_ball(w: &[f64], radius: f64) -> Vec<f64> {
    assert!(
        radius > 0.0 && radius.is_finite(),
        "projection radius must be positive"
    );
    let mut out = w.to_vec();
    project_ball_in_place(&mut out, radius);
    out
}

fn project_ball_in_place(w: &mut [f64], radius: f64) {
    let norm = numeric::norm2(w);
    if norm > radius {
        let scale = radius / norm;
        for x in w.iter_mut() {
            *x *= scale;
        }
    }
}

/// Per-coordinate noise scale making T full-batch gradient steps ρ-zCDP in
/// total: each averaged gradient has replace-one sensitivity 2L/n, and the
/// per-step budget is ρ/T, so σ_step = (2L/n)·√(T/(2ρ)). Zero for the
/// non-private sentinel.
pub fn gd_noise_scale(n: usize, lipschitz: f64, steps: usize, rho: ZcdpBudget) -> Result<f64> {
    if rho.is_non_private() {
        return Ok(0.0);
    }
    if rho.rho() <= 0.0 {
        return Err(Error::InvalidParameter(
            "training privately requires rho > 0 (use the non-private sentinel for rho = ∞)".into(),
        ));
    }
    let sens = 2.0 * lipschitz / n as f64;
    Ok(sens * (steps as f64 / (2.0 * rho.rho())).sqrt())
}

/// Projected noisy full-batch gradient descent.
///
/// Runs T steps of w ← Π_ball(w − η_t·(∇L̂(w) + ξ_t)), ξ_t ~ N(0, σ_step²·I),
/// and releases the projected average of the second half of the trajectory
/// (suffix averaging: the early iterates are a cold start, the last iterate
/// alone is noise-dominated, and the suffix mean attains the noisy-gradient
/// rate). The returned certificate is the requested ρ.
pub fn noisy_gd(dataset: &Dataset, loss: &LossSpec, config: &TrainerConfig) -> Result<Model> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.n();
    let d = dataset.dim();
    let steps = config.steps.unwrap_or(n * n);
    if steps == 0 {
        return Err(Error::InvalidParameter("step count must be ≥ 1".into()));
    }
    config.step_size.validate()?;
    let radius = loss.radius();
    let sigma_step = gd_noise_scale(n, loss.lipschitz(), steps, config.rho)?;

    let mut w = match &config.init {
        Some(init) => {
            if init.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: init.len(),
                });
            }
            let norm = numeric::norm2(init);
            if norm > radius + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "init norm {norm} outside the ball of radius {radius}"
                )));
            }
            init.clone()
        }
        None => vec![0.0; d],
    };

    let auto_eta = loss.diameter()
        / ((steps as f64).sqrt() * (loss.lipschitz() + sigma_step * (d as f64).sqrt()));
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut grad = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let suffix_start = steps / 2;
    let mut acc = vec![0.0; d];

    for t in 0..steps {
        loss.batch_gradient_into(&w, dataset, &mut grad, &mut scratch);
        if sigma_step > 0.0 {
            for g in grad.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *g += sigma_step * z;
            }
        }
        let eta = match config.step_size {
            StepSize::Auto => auto_eta,
            StepSize::Constant(eta) => eta,
            StepSize::Decaying(eta0) => eta0 / ((t + 1) as f64).sqrt(),
        };
        for (wi, g) in w.iter_mut().zip(grad.iter()) {
            *wi -= eta * g;
        }
        project_ball_in_place(&mut w, radius);
        if t >= suffix_start {
            for (a, wi) in acc.iter_mut().zip(w.iter()) {
                *a += wi;
            }
        }
    }

    let count = (steps - suffix_start) as f64;
    for a in acc.iter_mut() {
        *a /= count;
    }
    // The average of in-ball iterates is in the ball; projection only mops
    // up floating-point residue.
    project_ball_in_place(&mut acc, radius);

    Ok(Model {
        dimension: d,
        params: acc,
        rho: config.rho.rho(),
        seed: config.seed,
        config: ModelConfig {
            learner: "noisy-gd".into(),
            n,
            steps,
            step_size: config.step_size.describe(),
            padded_to: None,
        },
    })
}

/// One-shot private mean release: q(S) plus isotropic Gaussian noise at
/// σ = sensitivity/√(2ρ), where the replace-one sensitivity of the mean is
/// 2·max‖x‖/n (= 2/n on unit-norm instances).
pub fn gaussian_mean_release(dataset: &Dataset, rho: ZcdpBudget, seed: u64) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.n();
    let mut q = hardinstance::one_way_marginal(dataset)?;
    let max_norm = dataset
        .iter_points()
        .map(numeric::norm2)
        .fold(0.0f64, f64::max);
    let sensitivity = 2.0 * max_norm / n as f64;
    let sigma = accountant::gaussian_sigma(sensitivity, rho)?;
    if sigma > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for qi in q.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *qi += sigma * z;
        }
    }
    Ok(q)
}

/// How many noiseless reference steps the generic-convex minimizer search
/// uses in [`excess_empirical_loss`].
const REFERENCE_STEPS: usize = 20_000;

/// Empirical excess loss L̂(w) − L̂(ŵ*) ≥ 0.
///
/// Linear losses use the closed form: the ball-constrained minimizer is
/// (D/2)·q/‖q‖, so the excess is (D/2)‖q‖ − ⟨w, q⟩. Other convexity classes
/// compare against a high-accuracy noiseless GD reference solve, and the
/// result is exact only up to that reference tolerance (clamped at 0).
pub fn excess_empirical_loss(model: &Model, dataset: &Dataset, loss: &LossSpec) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = dataset.dim();
    if model.params.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: model.params.len(),
        });
    }
    match loss.convexity() {
        Convexity::Linear => {
            let q = hardinstance::one_way_marginal(dataset)?;
            let q_norm = numeric::norm2(&q);
            if q_norm * dataset.n() as f64 <= 1e-12 {
                return Err(Error::DegenerateDataset(
                    "zero-sum instance: the linear loss has no unique minimizer".into(),
                ));
            }
            Ok((loss.radius() * q_norm - numeric::dot(&model.params, &q)).max(0.0))
        }
        Convexity::Convex | Convexity::StronglyConvex(_) => {
            let reference = noisy_gd(
                dataset,
                loss,
                &TrainerConfig::new(ZcdpBudget::non_private(), 0).with_steps(REFERENCE_STEPS),
            )?;
            let at_model = loss.empirical_value(&model.params, dataset)?;
            let at_min = loss.empirical_value(&reference.params, dataset)?;
            Ok((at_model - at_min).max(0.0))
        }
    }
}
