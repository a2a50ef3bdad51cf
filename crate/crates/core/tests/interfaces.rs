//! Stability tests for the on-disk formats: JSON artifacts, CSV datasets,
//! the JSON-Lines deletion ledger, and the flat TOML sweep config. These
//! pin the exact key sets and encodings so downstream tooling can rely on
//! them.

use std::collections::BTreeSet;

use serde_json::Value;

use unlearn_dp::accountant::{ApproxDpBudget, CapacityRegime};
use unlearn_dp::audit::{AuditReport, EstimatorKind, SampleBatch, Verdict};
use unlearn_dp::experiments::{SweepConfig, SweepResult};
use unlearn_dp::hardinstance::{
    gen_hard_dataset, rescale_to_signs, two_block_dataset, Dataset, DatasetManifest,
};
use unlearn_dp::trainer::{Model, ModelConfig};
use unlearn_dp::unlearning::{
    append_ledger, read_ledger, DeletionRequest, LedgerRecord, SideInformation,
    UnlearningCertificate,
};

fn budget() -> ApproxDpBudget {
    ApproxDpBudget::new(1.0, 1e-5).unwrap()
}

fn sample_model(rho: f64) -> Model {
    Model {
        dimension: 3,
        params: vec![0.125, -0.6180339887498949, 1.0 / 3.0],
        rho,
        seed: 42,
        config: ModelConfig {
            learner: "mean-release".into(),
            n: 20,
            steps: 1,
            step_size: "auto".into(),
            padded_to: None,
        },
    }
}

fn object_keys(value: &Value) -> Vec<&str> {
    value
        .as_object()
        .expect("expected a JSON object")
        .keys()
        .map(String::as_str)
        .collect()
}

#[test]
fn model_json_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let model = sample_model(0.023);
    model.write_json(&path).unwrap();
    let back = Model::read_json(&path).unwrap();
    assert_eq!(back, model);
    for (a, b) in back.params.iter().zip(&model.params) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(back.rho.to_bits(), model.rho.to_bits());
}

#[test]
fn model_json_encodes_the_nonprivate_sentinel_as_null() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let model = sample_model(f64::INFINITY);
    model.write_json(&path).unwrap();

    let raw: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(
        raw["rho"],
        Value::Null,
        "non-private models must write rho: null"
    );

    let back = Model::read_json(&path).unwrap();
    assert!(back.rho.is_infinite() && back.rho > 0.0);
}

#[test]
fn model_json_key_set_is_stable() {
    // serde_json::Value stores objects sorted by key, so the golden lists
    // below are alphabetical.
    let mut model = sample_model(0.5);
    let raw: Value = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    assert_eq!(
        object_keys(&raw),
        ["config", "dimension", "params", "rho", "seed"]
    );
    // `padded_to` only appears when a size lift was applied.
    assert_eq!(
        object_keys(&raw["config"]),
        ["learner", "n", "step_size", "steps"]
    );
    model.config.padded_to = Some(40);
    let raw: Value = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    assert_eq!(
        object_keys(&raw["config"]),
        ["learner", "n", "padded_to", "step_size", "steps"]
    );
}

#[test]
fn certificate_json_key_set_and_encodings_are_stable() {
    let mut cert =
        UnlearningCertificate::new(budget(), 3, CapacityRegime::ApproxConvexFloor, 0.1, 20);
    cert.record(&DeletionRequest::new(vec![7, 2])).unwrap();

    let raw: Value = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
    assert_eq!(
        object_keys(&raw),
        [
            "alpha",
            "capacity",
            "dataset_size",
            "deleted",
            "delta",
            "epsilon",
            "lazy",
            "regime"
        ]
    );
    assert_eq!(raw["regime"], "approx-convex-floor");
    assert_eq!(raw["lazy"], true);
    // The ledger serializes sorted, regardless of request order.
    assert_eq!(raw["deleted"], serde_json::json!([2, 7]));
}

#[test]
fn certificate_json_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("certificate.json");
    let mut cert =
        UnlearningCertificate::new(budget(), 4, CapacityRegime::ApproxStronglyConvex, 0.25, 50);
    cert.record(&DeletionRequest::new(vec![10, 49])).unwrap();
    cert.write_json(&path).unwrap();
    let back = UnlearningCertificate::read_json(&path).unwrap();
    assert_eq!(back, cert);
    assert_eq!(back.deleted(), &BTreeSet::from([10, 49]));
    assert_eq!(back.remaining(), 2);
}

#[test]
fn certificate_reader_rejects_a_ledger_outside_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("certificate.json");
    std::fs::write(
        &path,
        r#"{"epsilon":1.0,"delta":1e-5,"capacity":3,"regime":"approx-convex-floor",
           "alpha":0.1,"lazy":true,"dataset_size":20,"deleted":[5,20]}"#,
    )
    .unwrap();
    let err = UnlearningCertificate::read_json(&path).unwrap_err();
    assert!(err.to_string().contains("20"), "unexpected error: {err}");
}

#[test]
fn audit_report_round_trips_with_kebab_case_enums() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let report = AuditReport {
        epsilon_hat: 0.93,
        ci_lower: 0.88,
        ci_upper: 1.01,
        delta: 1e-5,
        trials: 100_000,
        bins: 0,
        estimator: EstimatorKind::GaussianMoments,
        certified_epsilon: Some(1.0),
        verdict: Verdict::Pass,
    };
    report.write_json(&path).unwrap();
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(raw["estimator"], "gaussian-moments");
    assert_eq!(raw["verdict"], "pass");
    assert_eq!(AuditReport::read_json(&path).unwrap(), report);
}

#[test]
fn dataset_csv_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();

    // Generated instance: coordinates are ±1/√d, irrational reals that
    // survive the trip exactly because the writer uses shortest
    // round-trip float formatting.
    let cube = gen_hard_dataset(24, 5, 9, None).unwrap();
    let coord = 1.0 / (5.0_f64).sqrt();
    let cube_path = dir.path().join("cube.csv");
    cube.write_csv(&cube_path).unwrap();
    let text = std::fs::read_to_string(&cube_path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 24, "one CSV row per sample, no header");
    for row in &rows {
        assert_eq!(row.split(',').count(), 5);
        for cell in row.split(',') {
            let v: f64 = cell.parse().unwrap();
            assert!(v == coord || v == -coord, "cell {v} is not ±1/√5");
        }
    }
    assert_eq!(Dataset::read_csv(&cube_path).unwrap(), cube);

    // ±1 sign view: integer cells, same bitwise guarantee.
    let signs = rescale_to_signs(&cube).unwrap();
    let signs_path = dir.path().join("signs.csv");
    signs.write_csv(&signs_path).unwrap();
    assert_eq!(Dataset::read_csv(&signs_path).unwrap(), signs);

    // Two-block instance: deterministic rows, same scaled coordinates.
    let blocks = two_block_dataset(10, 3, 7).unwrap();
    let blocks_path = dir.path().join("blocks.csv");
    blocks.write_csv(&blocks_path).unwrap();
    assert_eq!(Dataset::read_csv(&blocks_path).unwrap(), blocks);
}

#[test]
fn manifest_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    let manifest = DatasetManifest {
        n: 128,
        d: 8,
        seed: 11,
        bias: Some(0.3),
        kind: "hypercube".into(),
    };
    manifest.write_json(&path).unwrap();
    assert_eq!(DatasetManifest::read_json(&path).unwrap(), manifest);
}

#[test]
fn sweep_config_toml_is_flat_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.toml");
    let config = SweepConfig::default();
    config.write_toml(&path).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    for line in text.lines() {
        assert!(
            !line.trim_start().starts_with('['),
            "config must stay a flat key = value file, found table header: {line}"
        );
    }
    for key in [
        "n",
        "d",
        "m",
        "epsilon",
        "delta",
        "seeds",
        "base_seed",
        "kappa",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key} "))),
            "missing key {key} in:\n{text}"
        );
    }
    assert_eq!(SweepConfig::read_toml(&path).unwrap(), config);
}

#[test]
fn sweep_config_accepts_partial_files_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.toml");
    std::fs::write(&path, "seeds = 12\nepsilon = [0.5]\n").unwrap();
    let config = SweepConfig::read_toml(&path).unwrap();
    assert_eq!(config.seeds, 12);
    assert_eq!(config.epsilon, vec![0.5]);
    assert_eq!(
        config.n,
        SweepConfig::default().n,
        "unset keys take defaults"
    );

    std::fs::write(&path, "seeds = 12\ntypo_key = 3\n").unwrap();
    assert!(SweepConfig::read_toml(&path).is_err());
}

#[test]
fn side_information_serializes_to_null() {
    assert_eq!(serde_json::to_string(&SideInformation).unwrap(), "null");
    let back: SideInformation = serde_json::from_str("null").unwrap();
    assert_eq!(back, SideInformation);
}

#[test]
fn ledger_file_is_one_json_record_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.jsonl");
    append_ledger(
        &path,
        &LedgerRecord::new(&DeletionRequest::new(vec![3, 1]), 5),
    )
    .unwrap();
    append_ledger(&path, &LedgerRecord::new(&DeletionRequest::new(vec![8]), 4)).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.ends_with('\n'), "ledger must end with a newline");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in &lines {
        let record: LedgerRecord = serde_json::from_str(line).unwrap();
        assert!(record.timestamp > 0);
    }
    let records = read_ledger(&path).unwrap();
    assert_eq!(records[0].indices, vec![1, 3], "requests serialize sorted");
    assert_eq!(records[1].remaining, 4);
}

#[test]
fn sample_batch_csv_is_headerless_one_scalar_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.csv");
    let batch = SampleBatch {
        values: vec![0.5, -1.25e-7, 3.0],
        label: "unlearned".into(),
        base_seed: 9,
    };
    batch.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(parsed, batch.values);
}

#[test]
fn sweep_csv_and_summary_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        n: vec![64],
        d: vec![2],
        m: vec![0, 1],
        epsilon: vec![1.0],
        seeds: 4,
        verify: false,
        ..SweepConfig::default()
    };
    let result = unlearn_dp::experiments::run_capacity_sweep(&config).unwrap();

    let csv_path = dir.path().join("sweep.csv");
    result.write_csv(&csv_path).unwrap();
    let rows = SweepResult::read_csv(&csv_path).unwrap();
    assert_eq!(rows, result.rows);

    let header = std::fs::read_to_string(&csv_path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert_eq!(
        header,
        "n,d,m,epsilon,delta,seeds,rho,sigma,marginal_norm,privacy_term,\
         mean_excess_risk,stderr_excess_risk,mean_empirical_excess,\
         stderr_empirical_excess,capacity_at_measured_risk,audit_epsilon_hat,error"
    );

    let summary_path = dir.path().join("summary.json");
    result.write_summary_json(&summary_path).unwrap();
    assert_eq!(
        SweepResult::read_summary_json(&summary_path).unwrap(),
        result.summary
    );
}
