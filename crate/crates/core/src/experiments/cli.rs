//! Command-line interface. `cli_dispatch` is the whole program: it parses
//! argv, runs one subcommand, prints the result, and returns the process
//! exit code (0 success, 1 verification/runtime failure, 2 usage error).

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::accountant::{
    chain_budget, deletion_capacity, group_zcdp, grouposition_budget, rho_for_target, zcdp_to_dp,
    ApproxDpBudget, CapacityQuery, CapacityRegime,
};
use crate::audit::{audit_unlearning, Verdict};
use crate::error::{Error, Result};
use crate::hardinstance::{
    gen_hard_dataset, hypercube_coord, linear_loss, minimizer_theta_star, most_aligned_indices,
    one_way_marginal, pad_dataset, replicate_dataset, rescale_from_signs, rescale_to_signs,
    Dataset, DatasetManifest,
};
use crate::numeric::{derive_seed, dot, norm2};
use crate::trainer::{LossSpec, Model, StepSize};
use crate::unlearning::{
    append_ledger, unlearn_lazy, DeletionRequest, GdLearner, Learner, LedgerRecord,
    MeanReleaseLearner, SideInformation, UnlearningCertificate,
};

use super::config::SweepConfig;
use super::sweep::run_capacity_sweep;

#[derive(Parser)]
#[command(
    name = "unlearn-dp",
    version,
    about = "Differentially private learning with certified deletion",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form deletion-capacity bound.
    Capacity(CapacityArgs),
    /// Train a certified model and write its artifacts to a directory.
    Train(TrainArgs),
    /// Apply a lazy deletion against a model/certificate pair.
    Unlearn(UnlearnArgs),
    /// Distinguishing audit of the lazy pair against a retrain baseline.
    Audit(AuditArgs),
    /// Run a deletion-capacity sweep and fit its scaling law.
    Sweep(SweepArgs),
    /// Print budget tables for chained or merged unlearning runs.
    Account(AccountArgs),
    /// Run the hard-instance and accountant self-checks.
    IdentityCheck(IdentityCheckArgs),
}

fn parse_regime(s: &str) -> std::result::Result<CapacityRegime, String> {
    s.parse::<CapacityRegime>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct CapacityArgs {
    /// One of: approx-convex-floor, approx-convex-ceiling,
    /// approx-strongly-convex, pure-convex-floor, pure-convex-ceiling.
    #[arg(long, value_parser = parse_regime)]
    regime: CapacityRegime,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    eps: f64,
    /// Use 0 for the pure-DP regimes.
    #[arg(long)]
    delta: f64,
    /// Excess-risk tolerance in [0, 1].
    #[arg(long)]
    alpha: f64,
    /// Leading constant of the bound (fit one with `sweep`).
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    /// Strong-convexity modulus; required by pure-convex-floor.
    #[arg(long)]
    strong_convexity: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Load the dataset from a CSV file instead of generating one.
    #[arg(long, conflicts_with_all = ["n", "d", "bias"])]
    data: Option<PathBuf>,
    /// Rows of the generated scaled-hypercube dataset.
    #[arg(long)]
    n: Option<usize>,
    /// Dimension of the generated dataset.
    #[arg(long)]
    d: Option<usize>,
    /// Per-coordinate probability of the positive sign (default 1/2).
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Certified deletion capacity.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Accuracy level recorded in the certificate.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// "gd" (noisy projected gradient descent) or "mean-release".
    #[arg(long, default_value = "gd")]
    learner: String,
    /// Gradient-descent step count (default n²).
    #[arg(long)]
    steps: Option<usize>,
    /// "auto", "constant:<eta>", or "decaying:<eta0>".
    #[arg(long)]
    step_size: Option<String>,
    /// Pad the dataset to this many rows with a neutral ± pair block.
    #[arg(long)]
    pad: Option<usize>,
    /// Output directory for dataset.csv, manifest.json, model.json,
    /// certificate.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UnlearnArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    certificate: PathBuf,
    /// Comma-separated dataset indices to delete (empty deletes nothing).
    #[arg(long, default_value = "")]
    indices: String,
    /// Append a deletion record to this JSON-lines ledger.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Where to write the unlearned model (default: overwrite --model).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Dataset CSV to audit on.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated indices of the deletion request.
    #[arg(long, default_value = "")]
    indices: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Certified capacity the mechanism is calibrated for.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Samples per arm (≥ 1000).
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// "mean-release" (fast, exact Gaussian shape) or "gd".
    #[arg(long, default_value = "mean-release")]
    learner: String,
    /// Lift both arms to this size with neutral padding so the mechanism's
    /// noise scale does not leak the dataset size.
    #[arg(long)]
    pad: Option<usize>,
    /// Write the audit report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration TOML; defaults to the standard grid.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for sweep.csv, summary.json, config.toml.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of seeds per grid point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Override the root seed.
    #[arg(long)]
    base_seed: Option<u64>,
    /// Run without verification regardless of the config.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["chain", "group"])))]
struct AccountArgs {
    /// Sequential chain of k deletions, each (eps, delta)-indistinguishable.
    #[arg(long)]
    chain: bool,
    /// Merge of k parallel runs (grouposition).
    #[arg(long)]
    group: bool,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    /// Slack δ′ spent by the merge step (grouposition only).
    #[arg(long, default_value_t = 1e-9)]
    delta_prime: f64,
}

#[derive(Args)]
struct IdentityCheckArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// What a subcommand produced: text for stdout and whether verification
/// succeeded (false maps to exit code 1).
#[derive(Debug)]
struct CmdOutput {
    text: String,
    ok: bool,
}

impl CmdOutput {
    fn ok(text: String) -> Self {
        CmdOutput { text, ok: true }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } | Error::RegimeMismatch(_) => 2,
        _ => 1,
    }
}

/// Format a number compactly: plain shortest form, switching to scientific
/// notation below 1e-3 (so budget tables print 1e-6, not 0.000001).
fn fmt_compact(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn parse_indices(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| {
                Error::InvalidParameter(format!("bad index {part:?} in --indices list"))
            })
        })
        .collect()
}

fn parse_step_size(s: &str) -> Result<StepSize> {
    let s = s.trim();
    if s == "auto" {
        return Ok(StepSize::Auto);
    }
    let parse_eta = |value: &str| {
        value
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad step size value {value:?}")))
    };
    if let Some(v) = s
        .strip_prefix("constant:")
        .or_else(|| s.strip_prefix("const:"))
    {
        return Ok(StepSize::Constant(parse_eta(v)?));
    }
    if let Some(v) = s
        .strip_prefix("decaying:")
        .or_else(|| s.strip_prefix("decay:"))
    {
        return Ok(StepSize::Decaying(parse_eta(v)?));
    }
    Err(Error::InvalidParameter(format!(
        "step size must be \"auto\", \"constant:<eta>\", or \"decaying:<eta0>\", got {s:?}"
    )))
}

/// Build the learner named on the command line.
fn build_learner(
    name: &str,
    steps: Option<usize>,
    step_size: Option<&str>,
    pad: Option<usize>,
) -> Result<Box<dyn Learner>> {
    match name {
        "mean-release" => {
            let mut learner = MeanReleaseLearner::new();
            if let Some(p) = pad {
                learner = learner.with_pad_to(p);
            }
            if steps.is_some() || step_size.is_some() {
                return Err(Error::InvalidParameter(
                    "--steps/--step-size only apply to the gd learner".into(),
                ));
            }
            Ok(Box::new(learner))
        }
        "gd" => {
            let mut learner = GdLearner::new(LossSpec::linear());
            if let Some(t) = steps {
                learner = learner.with_steps(t);
            }
            if let Some(s) = step_size {
                learner = learner.with_step_size(parse_step_size(s)?);
            }
            if let Some(p) = pad {
                learner = learner.with_pad_to(p);
            }
            Ok(Box::new(learner))
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown learner {other:?}; use \"gd\" or \"mean-release\""
        ))),
    }
}

fn run_capacity(args: CapacityArgs) -> Result<CmdOutput> {
    let budget = ApproxDpBudget::new(args.eps, args.delta)?;
    let mut query = CapacityQuery::new(args.regime, args.n, args.d, args.alpha, budget)
        .with_constant(args.constant)
        .with_lipschitz(args.lipschitz);
    if let Some(sc) = args.strong_convexity {
        query = query.with_strong_convexity(sc);
    }
    let capacity = deletion_capacity(&query)?;
    Ok(CmdOutput::ok(format!("{capacity}")))
}

fn run_train(args: TrainArgs) -> Result<CmdOutput> {
    let (dataset, manifest) = match &args.data {
        Some(path) => {
            let dataset = Dataset::read_csv(path)?;
            let manifest = DatasetManifest {
                n: dataset.n(),
                d: dataset.dim(),
                seed: args.seed,
                bias: None,
                kind: "file".into(),
            };
            (dataset, manifest)
        }
        None => {
            let (n, d) = match (args.n, args.d) {
                (Some(n), Some(d)) => (n, d),
                _ => {
                    return Err(Error::InvalidParameter(
                        "train needs either --data or both --n and --d".into(),
                    ))
                }
            };
            let gen_seed = derive_seed(args.seed, 0);
            let dataset = gen_hard_dataset(n, d, gen_seed, args.bias)?;
            let manifest = DatasetManifest {
                n,
                d,
                seed: gen_seed,
                bias: Some(args.bias.unwrap_or(0.5)),
                kind: "product".into(),
            };
            (dataset, manifest)
        }
    };

    let learner = build_learner(
        &args.learner,
        args.steps,
        args.step_size.as_deref(),
        args.pad,
    )?;
    let target = ApproxDpBudget::new(args.eps, args.delta)?;
    let train_seed = derive_seed(args.seed, 1);
    let regime = CapacityRegime::ApproxConvexFloor;
    let (model, certificate) = crate::unlearning::learn_with(
        learner.as_ref(),
        &dataset,
        target,
        args.m,
        args.alpha,
        regime,
        train_seed,
    )?;

    std::fs::create_dir_all(&args.out)?;
    let paths = [
        args.out.join("dataset.csv"),
        args.out.join("manifest.json"),
        args.out.join("model.json"),
        args.out.join("certificate.json"),
    ];
    dataset.write_csv(&paths[0])?;
    manifest.write_json(&paths[1])?;
    model.write_json(&paths[2])?;
    certificate.write_json(&paths[3])?;

    let mut lines = vec![format!(
        "trained {} on n={} d={}: rho={} capacity={} alpha={}",
        learner.describe(),
        dataset.n(),
        dataset.dim(),
        fmt_compact(model.rho),
        certificate.capacity(),
        fmt_compact(certificate.alpha()),
    )];
    for p in &paths {
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(CmdOutput::ok(lines.join("\n")))
}

fn run_unlearn(args: UnlearnArgs) -> Result<CmdOutput> {
    let model = Model::read_json(&args.model)?;
    let mut certificate = UnlearningCertificate::read_json(&args.certificate)?;
    let request = DeletionRequest::new(parse_indices(&args.indices)?);
    let requested = request.len();
    let before = certificate.deleted().len();

    let unlearned = unlearn_lazy(&request, &model, &SideInformation, &mut certificate)?;

    let out_path = args.out.as_deref().unwrap_or(args.model.as_path());
    unlearned.write_json(out_path)?;
    certificate.write_json(&args.certificate)?;
    if let Some(ledger) = &args.ledger {
        append_ledger(
            ledger,
            &LedgerRecord::new(&request, certificate.remaining()),
        )?;
    }

    let newly = certificate.deleted().len() - before;
    Ok(CmdOutput::ok(format!(
        "deleted {newly} new of {requested} requested indices; {} total; remaining capacity {}",
        certificate.deleted().len(),
        certificate.remaining()
    )))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn run_audit(args: AuditArgs) -> Result<CmdOutput> {
    let dataset = Dataset::read_csv(&args.data)?;
    let request = DeletionRequest::new(parse_indices(&args.indices)?);
    let learner = build_learner(&args.learner, None, None, args.pad)?;
    let target = ApproxDpBudget::new(args.eps, args.delta)?;
    let report = audit_unlearning(
        learner.as_ref(),
        &dataset,
        &request,
        target,
        args.m,
        args.trials,
        args.seed,
    )?;
    if let Some(out) = &args.out {
        report.write_json(out)?;
    }
    let text = format!(
        "epsilon_hat={:.6} ci=[{:.6}, {:.6}] certified={} trials={} verdict={}",
        report.epsilon_hat,
        report.ci_lower,
        report.ci_upper,
        report
            .certified_epsilon
            .map(fmt_compact)
            .unwrap_or_else(|| "none".into()),
        report.trials,
        verdict_str(report.verdict),
    );
    Ok(CmdOutput {
        text,
        ok: report.verdict != Verdict::Fail,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

fn run_sweep(args: SweepArgs) -> Result<CmdOutput> {
    let mut config = match &args.config {
        Some(path) => SweepConfig::read_toml(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
    }
    if let Some(base_seed) = args.base_seed {
        config.base_seed = base_seed;
    }
    if args.no_verify {
        config.verify = false;
    }
    config.validate()?;

    let result = run_capacity_sweep(&config)?;

    std::fs::create_dir_all(&args.out)?;
    config.write_toml(args.out.join("config.toml"))?;
    result.write_csv(args.out.join("sweep.csv"))?;
    result.write_summary_json(args.out.join("summary.json"))?;

    let s = &result.summary;
    let lines = [
        format!("sweep: rows={} failures={}", s.rows, s.failures),
        format!(
            "constant: fitted={} even={} odd={} spread={}",
            opt(s.fitted_constant),
            opt(s.constant_even),
            opt(s.constant_odd),
            opt(s.constant_spread)
        ),
        format!(
            "slopes: m={} inv_n={} sqrt_d={} inv_eps={}",
            opt(s.slope_m),
            opt(s.slope_inv_n),
            opt(s.slope_sqrt_d),
            opt(s.slope_inv_eps)
        ),
        format!(
            "contract: fraction={} points={} capacity_constant={}",
            opt(s.contract_fraction),
            s.contract_points
                .map(|p| p.to_string())
                .unwrap_or_else(|| "n/a".into()),
            opt(s.capacity_constant)
        ),
        format!(
            "pass={}",
            match s.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "skipped",
            }
        ),
        format!("wrote {}", args.out.join("config.toml").display()),
        format!("wrote {}", args.out.join("sweep.csv").display()),
        format!("wrote {}", args.out.join("summary.json").display()),
    ];
    Ok(CmdOutput {
        text: lines.join("\n"),
        ok: s.pass != Some(false),
    })
}

fn run_account(args: AccountArgs) -> Result<CmdOutput> {
    let per_step = ApproxDpBudget::new(args.eps, args.delta)?;
    let mut lines = Vec::with_capacity(args.k as usize);
    for k in 1..=args.k {
        let budget = if args.chain {
            chain_budget(k, per_step)?
        } else {
            grouposition_budget(k, per_step, args.delta_prime)?
        };
        lines.push(format!(
            "k={k}: ({}, {})",
            fmt_compact(budget.epsilon()),
            fmt_compact(budget.delta())
        ));
    }
    Ok(CmdOutput::ok(lines.join("\n")))
}

/// One self-check: named, and either clean or failed with a reason.
type Check = (&'static str, std::result::Result<(), String>);

fn run_identity_checks(n: usize, d: usize, seed: u64) -> Result<Vec<Check>> {
    let mut checks: Vec<Check> = Vec::new();
    let dataset = gen_hard_dataset(n, d, seed, None)?;
    let q = one_way_marginal(&dataset)?;
    let c = hypercube_coord(d);

    checks.push((
        "hypercube-support",
        if dataset.is_on_hypercube() {
            Ok(())
        } else {
            Err("generated rows left the ±1/√d hypercube".into())
        },
    ));

    // The marginal must equal the integer sign-count formula bitwise.
    let mut counting = Ok(());
    for j in 0..d {
        let plus = dataset.iter_points().filter(|row| row[j] > 0.0).count();
        let expected = ((2 * plus) as f64 - n as f64) * c / n as f64;
        if q[j].to_bits() != expected.to_bits() {
            counting = Err(format!(
                "coordinate {j}: marginal {} differs from count formula {}",
                q[j], expected
            ));
            break;
        }
    }
    checks.push(("marginal-count-exact", counting));

    let mut replication = Ok(());
    for m in [2usize, 3] {
        let replicated = replicate_dataset(&dataset, m)?;
        let qm = one_way_marginal(&replicated)?;
        if qm.iter().zip(&q).any(|(a, b)| a.to_bits() != b.to_bits()) {
            replication = Err(format!("replication by {m} moved the marginal"));
            break;
        }
    }
    checks.push(("replication-invariance", replication));

    let anchor = vec![c; d];
    let padded = pad_dataset(&dataset, 2 * n, &anchor)?;
    let qp = one_way_marginal(&padded)?;
    let mut padding = Ok(());
    for j in 0..d {
        let expected = q[j] * n as f64 / (2 * n) as f64;
        if (qp[j] - expected).abs() > 1e-12 * c.max(expected.abs()) {
            padding = Err(format!(
                "coordinate {j}: padded marginal {} is not the halved {}",
                qp[j], expected
            ));
            break;
        }
    }
    checks.push(("padding-halves-the-marginal", padding));

    let theta_star = minimizer_theta_star(&dataset)?;
    let norm = norm2(&theta_star);
    checks.push((
        "minimizer-unit-norm",
        if norm == 0.0 || (norm - 1.0).abs() <= 1e-12 {
            Ok(())
        } else {
            Err(format!("‖θ*‖ = {norm}"))
        },
    ));

    // Excess empirical loss must equal ‖q‖ − ⟨θ, q⟩ for any unit θ.
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 99));
    let mut excess = Ok(());
    for _ in 0..3 {
        let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = norm2(&raw);
        if norm == 0.0 {
            continue;
        }
        let theta: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let lhs = linear_loss(&theta, &dataset)? - linear_loss(&theta_star, &dataset)?;
        let rhs = norm2(&q) - dot(&theta, &q);
        if (lhs - rhs).abs() > 1e-9 {
            excess = Err(format!("loss gap {lhs} vs closed form {rhs}"));
            break;
        }
    }
    checks.push(("excess-loss-closed-form", excess));

    let signs = rescale_to_signs(&dataset)?;
    let back = rescale_from_signs(&signs)?;
    checks.push((
        "rescale-round-trip",
        if back == dataset {
            Ok(())
        } else {
            Err("±1 rescaling does not round-trip".into())
        },
    ));

    let picked = most_aligned_indices(&dataset, n.min(5))?;
    let score = |i: usize| dot(dataset.point(i), &theta_star);
    let picked_set: BTreeSet<usize> = picked.iter().copied().collect();
    let min_picked = picked
        .iter()
        .map(|&i| score(i))
        .fold(f64::INFINITY, f64::min);
    let max_rest = (0..n)
        .filter(|i| !picked_set.contains(i))
        .map(score)
        .fold(f64::NEG_INFINITY, f64::max);
    let ordered = picked.windows(2).all(|w| score(w[0]) >= score(w[1]));
    checks.push((
        "aligned-deletion-order",
        if ordered && (picked.len() == n || min_picked >= max_rest) {
            Ok(())
        } else {
            Err("most-aligned selection is not the top of the alignment order".into())
        },
    ));

    // Calibration round trip: spending ρ(ε, δ, m) and paying m-fold group
    // privacy must land back on (ε, δ) exactly.
    let mut round_trip = Ok(());
    'outer: for m in [1u32, 4] {
        for eps in [0.5f64, 2.0] {
            let target = ApproxDpBudget::new(eps, 1e-5)?;
            let rho = rho_for_target(target, m)?;
            let grouped = group_zcdp(m, rho)?;
            let back = zcdp_to_dp(grouped, 1e-5)?;
            if (back.epsilon() - eps).abs() > 1e-9 {
                round_trip = Err(format!(
                    "m={m} ε={eps}: round trip returned ε={}",
                    back.epsilon()
                ));
                break 'outer;
            }
        }
    }
    checks.push(("budget-round-trip", round_trip));

    let budget = ApproxDpBudget::new(1.0, 1e-5)?;
    let clamped = deletion_capacity(
        &CapacityQuery::new(
            CapacityRegime::ApproxConvexFloor,
            n as u64,
            d as u64,
            1.0,
            budget,
        )
        .with_constant(1e9),
    )?;
    let zero = deletion_capacity(&CapacityQuery::new(
        CapacityRegime::ApproxConvexFloor,
        n as u64,
        d as u64,
        0.0,
        budget,
    ))?;
    checks.push((
        "capacity-clamps-to-dataset",
        if clamped == n as u64 && zero == 0 {
            Ok(())
        } else {
            Err(format!("clamp gave {clamped}, zero tolerance gave {zero}"))
        },
    ));

    Ok(checks)
}

fn run_identity_check(args: IdentityCheckArgs) -> Result<CmdOutput> {
    if args.n < 2 || args.d < 1 {
        return Err(Error::InvalidParameter(
            "identity-check needs n ≥ 2 and d ≥ 1".into(),
        ));
    }
    let checks = run_identity_checks(args.n, args.d, args.seed)?;
    let total = checks.len();
    let mut lines = Vec::with_capacity(total + 1);
    let mut passed = 0usize;
    for (name, outcome) in &checks {
        match outcome {
            Ok(()) => {
                passed += 1;
                lines.push(format!("ok {name}"));
            }
            Err(reason) => lines.push(format!("FAIL {name}: {reason}")),
        }
    }
    lines.push(format!("identity-check: {passed}/{total} ok"));
    Ok(CmdOutput {
        text: lines.join("\n"),
        ok: passed == total,
    })
}

fn run_command(command: Command) -> Result<CmdOutput> {
    match command {
        Command::Capacity(args) => run_capacity(args),
        Command::Train(args) => run_train(args),
        Command::Unlearn(args) => run_unlearn(args),
        Command::Audit(args) => run_audit(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Account(args) => run_account(args),
        Command::IdentityCheck(args) => run_identity_check(args),
    }
}

/// Honor `UNLEARN_DP_THREADS` if set; silently keep the default pool when
/// the variable is absent, malformed, or the pool already exists.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("UNLEARN_DP_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

/// Parse argv (including the program name), run, print, and return the exit
/// code: 0 success, 1 verification or runtime failure, 2 usage error.
pub fn cli_dispatch<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv: Vec<&str> = args.iter().map(|s| s.as_ref()).collect();
    let cli = match Cli::try_parse_from(argv.iter().copied()) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    match run_command(cli.command) {
        Ok(output) => {
            if !output.text.is_empty() {
                println!("{}", output.text);
            }
            if output.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn dispatch(args: &[&str]) -> i32 {
        cli_dispatch(args)
    }

    #[test]
    fn capacity_example_from_the_interface_contract() {
        let args = CapacityArgs {
            regime: CapacityRegime::ApproxConvexFloor,
            n: 1000,
            d: 10,
            eps: 1.0,
            delta: 1e-5,
            alpha: 0.1,
            constant: 1.0,
            lipschitz: 1.0,
            strong_convexity: None,
        };
        let out = run_capacity(args).unwrap();
        assert_eq!(out.text, "9");
        assert!(out.ok);
    }

    #[test]
    fn account_chain_single_step_is_the_identity() {
        let args = AccountArgs {
            chain: true,
            group: false,
            k: 1,
            eps: 0.5,
            delta: 1e-6,
            delta_prime: 1e-9,
        };
        let out = run_account(args).unwrap();
        assert!(
            out.text.contains("(0.5, 1e-6)"),
            "identity chain row missing: {}",
            out.text
        );
    }

    #[test]
    fn account_table_matches_the_accountant_exactly() {
        let args = AccountArgs {
            chain: true,
            group: false,
            k: 4,
            eps: 0.3,
            delta: 1e-6,
            delta_prime: 1e-9,
        };
        let per_step = ApproxDpBudget::new(0.3, 1e-6).unwrap();
        let out = run_account(args).unwrap();
        let lines: Vec<&str> = out.text.lines().collect();
        assert_eq!(lines.len(), 4);
        for (i, line) in lines.iter().enumerate() {
            let k = (i + 1) as u32;
            let expected = chain_budget(k, per_step).unwrap();
            let inside = line
                .split_once('(')
                .and_then(|(_, rest)| rest.strip_suffix(')'))
                .unwrap_or_else(|| panic!("malformed row {line:?}"));
            let (eps_s, delta_s) = inside.split_once(", ").unwrap();
            let eps: f64 = eps_s.parse().unwrap();
            let delta: f64 = delta_s.parse().unwrap();
            assert!(
                (eps - expected.epsilon()).abs() <= 1e-12,
                "k={k}: ε printed {eps} vs accountant {}",
                expected.epsilon()
            );
            assert!(
                (delta - expected.delta()).abs() <= 1e-12 * expected.delta().max(1.0),
                "k={k}: δ printed {delta} vs accountant {}",
                expected.delta()
            );
        }
    }

    #[test]
    fn account_group_table_matches_grouposition() {
        let args = AccountArgs {
            chain: false,
            group: true,
            k: 3,
            eps: 0.4,
            delta: 1e-7,
            delta_prime: 1e-9,
        };
        let per = ApproxDpBudget::new(0.4, 1e-7).unwrap();
        let out = run_account(args).unwrap();
        let last = out.text.lines().last().unwrap();
        let expected = grouposition_budget(3, per, 1e-9).unwrap();
        let inside = last
            .split_once('(')
            .and_then(|(_, rest)| rest.strip_suffix(')'))
            .unwrap();
        let (eps_s, delta_s) = inside.split_once(", ").unwrap();
        assert!((eps_s.parse::<f64>().unwrap() - expected.epsilon()).abs() <= 1e-12);
        assert!(
            (delta_s.parse::<f64>().unwrap() - expected.delta()).abs()
                <= 1e-12 * expected.delta().max(1.0)
        );
    }

    #[test]
    fn compact_formatting_round_trips() {
        assert_eq!(fmt_compact(0.0), "0");
        assert_eq!(fmt_compact(0.5), "0.5");
        assert_eq!(fmt_compact(1e-6), "1e-6");
        assert_eq!(fmt_compact(2.1051709180756476e-6), "2.1051709180756476e-6");
        for &x in &[0.5, 1e-6, 2.1051709180756476e-6, 123.456, 9.999e-4] {
            assert_eq!(fmt_compact(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn indices_parsing() {
        assert_eq!(parse_indices("").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_indices("3").unwrap(), vec![3]);
        assert_eq!(parse_indices("1,2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_indices(" 2, 5 ").unwrap(), vec![2, 5]);
        assert!(parse_indices("a").is_err());
        assert!(parse_indices("1,,2").is_err());
    }

    #[test]
    fn step_size_parsing() {
        assert_eq!(parse_step_size("auto").unwrap(), StepSize::Auto);
        assert_eq!(
            parse_step_size("constant:0.25").unwrap(),
            StepSize::Constant(0.25)
        );
        assert_eq!(
            parse_step_size("decay:1.5").unwrap(),
            StepSize::Decaying(1.5)
        );
        assert!(parse_step_size("linear:2").is_err());
        assert!(parse_step_size("constant:x").is_err());
        // `describe` output parses back to the same schedule.
        for s in [
            StepSize::Auto,
            StepSize::Constant(0.1),
            StepSize::Decaying(2.0),
        ] {
            assert_eq!(parse_step_size(&s.describe()).unwrap(), s);
        }
    }

    #[test]
    fn identity_check_passes_on_a_small_instance() {
        let code = dispatch(&[
            "unlearn-dp",
            "identity-check",
            "--n",
            "32",
            "--d",
            "4",
            "--seed",
            "7",
        ]);
        assert_eq!(code, 0);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(&["unlearn-dp", "no-such-command"]), 2);
        assert_eq!(dispatch(&["unlearn-dp", "capacity"]), 2); // missing args
        assert_eq!(
            dispatch(&[
                "unlearn-dp",
                "account",
                "--k",
                "2",
                "--eps",
                "0.1",
                "--delta",
                "1e-6"
            ]),
            2
        ); // no mode
        assert_eq!(dispatch(&["unlearn-dp"]), 2);
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(dispatch(&["unlearn-dp", "--help"]), 0);
        assert_eq!(dispatch(&["unlearn-dp", "--version"]), 0);
        assert_eq!(dispatch(&["unlearn-dp", "sweep", "--help"]), 0);
    }

    #[test]
    fn train_then_unlearn_round_trip_on_disk() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("run");
        let args = TrainArgs {
            data: None,
            n: Some(24),
            d: Some(3),
            bias: None,
            seed: 5,
            eps: 1.0,
            delta: 1e-5,
            m: 2,
            alpha: 0.2,
            learner: "mean-release".into(),
            steps: None,
            step_size: None,
            pad: None,
            out: out.clone(),
        };
        let trained = run_train(args).unwrap();
        assert!(trained.ok);
        for f in [
            "dataset.csv",
            "manifest.json",
            "model.json",
            "certificate.json",
        ] {
            assert!(out.join(f).exists(), "missing {f}");
        }

        let ledger = out.join("ledger.jsonl");
        let unlearn = UnlearnArgs {
            model: out.join("model.json"),
            certificate: out.join("certificate.json"),
            indices: "1,7".into(),
            ledger: Some(ledger.clone()),
            out: Some(out.join("model-unlearned.json")),
        };
        let before = Model::read_json(out.join("model.json")).unwrap();
        let result = run_unlearn(unlearn).unwrap();
        assert!(result.ok);
        assert!(result.text.contains("remaining capacity 0"));
        let after = Model::read_json(out.join("model-unlearned.json")).unwrap();
        assert_eq!(
            after.params, before.params,
            "lazy unlearning must not move the model"
        );

        let cert = UnlearningCertificate::read_json(out.join("certificate.json")).unwrap();
        assert_eq!(cert.deleted().len(), 2);
        assert!(ledger.exists());

        // A third deletion exceeds the capacity-2 certificate: exit code 1.
        let over = UnlearnArgs {
            model: out.join("model.json"),
            certificate: out.join("certificate.json"),
            indices: "9".into(),
            ledger: None,
            out: None,
        };
        let err = run_unlearn(over).unwrap_err();
        assert_eq!(exit_code_for(&err), 1);
    }

    #[test]
    fn runtime_and_usage_error_codes_split_as_documented() {
        assert_eq!(
            exit_code_for(&Error::InvalidParameter("x".into())),
            2,
            "bad parameters are usage errors"
        );
        assert_eq!(exit_code_for(&Error::InsufficientData("x".into())), 1);
        assert_eq!(exit_code_for(&Error::Io(std::io::Error::other("gone"))), 1);
    }
}
