use std::fs;
use std::path::Path;
use std::process::Command;

use encact::activations::{ActivationKind, ApproxReluConfig};
use encact::netgraph::{
    builtin_lenet5, plaintext_reference, LayerSpec, NetworkSpec, ParamsProfile,
};
use encact_bench::commands::{load_dataset, setup, sweep_csv};
use encact_bench::config::parse_degrees;
use encact_bench::inputs::SampleMode;
use encact_bench::{cmd_approx_analyze, cmd_compare, cmd_infer, cmd_plan, BenchError, RunConfig};
use tempfile::tempdir;

fn lenet(activation: &str, samples: usize) -> RunConfig {
    RunConfig {
        network: Some("lenet5".into()),
        activation: Some(activation.into()),
        samples: Some(samples),
        seed: Some(11),
        ..Default::default()
    }
}

fn encact(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_encact"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn infer_square_has_no_bootstraps() {
    let report = cmd_infer(&lenet("square", 10)).unwrap();
    assert_eq!(report.records.len(), 10);
    assert!(report.records.iter().all(|r| r.bootstraps == 0));
    assert_eq!(report.accuracy, None);
    assert_eq!(report.activation, "square");
    assert!(report.records.iter().enumerate().all(|(i, r)| r.index == i));
}

#[test]
fn reports_are_deterministic_across_workers() {
    let cfg = RunConfig {
        jobs: Some(1),
        ..lenet("relu_switch", 4)
    };
    let mut a = cmd_infer(&cfg).unwrap();
    let mut b = cmd_infer(&RunConfig {
        jobs: Some(3),
        ..cfg.clone()
    })
    .unwrap();
    a.timestamp = 0;
    b.timestamp = 0;
    b.config.jobs = a.config.jobs;
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn labels_matching_the_oracle_give_its_accuracy() {
    let dir = tempdir().unwrap();
    let cfg = lenet("square", 6);
    let s = setup(&cfg, Some("square")).unwrap();
    let ds = load_dataset(&cfg, &s.net).unwrap();
    let mut labels = Vec::new();
    for (i, img) in ds.images.iter().enumerate() {
        let path = dir.path().join(format!("img{i}.csv"));
        encact_bench::write_tensor_csv(&path, &[1, 28, 28], img).unwrap();
        let logits = plaintext_reference(&s.net, &s.weights, img, true).unwrap();
        // every other label deliberately wrong
        let top = encact::netgraph::argmax(&logits);
        labels.push(if i % 2 == 0 { top } else { (top + 1) % 10 } as f64);
    }
    let label_file = dir.path().join("labels.txt");
    encact_bench::write_tensor_csv(&label_file, &[labels.len()], &labels).unwrap();
    let cfg = RunConfig {
        inputs: Some(dir.path().to_path_buf()),
        labels: Some(label_file),
        ..cfg
    };
    let report = cmd_infer(&cfg).unwrap();
    assert_eq!(report.accuracy, Some(0.5));
    let rows = cmd_compare(&cfg).unwrap();
    assert_eq!(rows[0].plaintext_acc, Some(0.5));
    assert_eq!(rows[0].encrypted_acc, rows[0].plaintext_acc);
}

#[test]
fn switch_costs_more_than_square() {
    let rows = cmd_compare(&lenet("square,relu_switch", 2)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].cost_units > rows[0].cost_units);
    assert_eq!(rows[1].agreement, 1.0);
    assert_eq!(rows[0].plaintext_acc, None);
}

#[test]
fn plan_lenet_approx_has_four_sites() {
    let plan = cmd_plan(&lenet("relu_approx", 1)).unwrap();
    assert_eq!(plan.insert_before.len(), 4);
    let plan = cmd_plan(&lenet("square", 1)).unwrap();
    assert!(plan.insert_before.is_empty());
}

#[test]
fn unschedulable_toy_network() {
    let dir = tempdir().unwrap();
    let cfg = ApproxReluConfig::new(2.0, 64).unwrap();
    let net = NetworkSpec {
        name: "toy".into(),
        input_shape: [4, 1, 1],
        params_profile: ParamsProfile::Lenet,
        layers: vec![LayerSpec::fc("fc", 4, 4).with_activation(ActivationKind::ReluApprox(cfg))],
    };
    let path = dir.path().join("toy.json");
    fs::write(&path, net.to_json()).unwrap();
    let cfg = RunConfig {
        network: Some(path.display().to_string()),
        ..Default::default()
    };
    let err = cmd_plan(&cfg).unwrap_err();
    assert!(err.to_string().contains("needs 11 levels"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn approx_analyze_ten_rows() {
    let rows = cmd_approx_analyze(&RunConfig::default()).unwrap();
    let csv = sweep_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "degree,max_error,depth_cost");
    assert!(lines[5].starts_with("50,"));
    assert_eq!(parse_degrees("10..=30:10").unwrap(), vec![10, 20, 30]);
    assert_eq!(parse_degrees("5,7").unwrap(), vec![5, 7]);
    assert!(parse_degrees("5..").is_err());
}

#[test]
fn exit_codes() {
    let (code, _, err) = encact(&["infer", "--network", "resnet20", "--activation", "square"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = encact(&["infer", "--no-such-flag"]);
    assert_eq!(code, 2);
    let (code, _, _) = encact(&["infer", "--activation", "gelu"]);
    assert_eq!(code, 2);
    let (code, _, err) = encact(&["infer", "--weights", "/nonexistent/dir"]);
    assert_eq!(code, 3, "{err}");
    let (code, out, _) = encact(&["approx-analyze", "--degrees", "10,20"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    let internal = BenchError::Graph(encact::netgraph::GraphError::PlanMismatch("x".into()));
    assert_eq!(internal.exit_code(), 4);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempdir().unwrap();
    let conf = dir.path().join("run.json");
    fs::write(
        &conf,
        r#"{"network":"lenet5","activation":"relu_approx","beta":3.0,"samples":1}"#,
    )
    .unwrap();
    let out = dir.path().join("plan.json");
    let (code, _, err) = encact(&[
        "plan",
        "--config",
        conf.to_str().unwrap(),
        "--activation",
        "square",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(plan["bootstrap_count"], 0);
    let trace = fs::read_to_string(out.with_extension("trace.csv")).unwrap();
    assert!(trace.starts_with("layer,level_in,level_out,bootstrapped\n"));

    fs::write(&conf, r#"{"netwrok":"lenet5"}"#).unwrap();
    let (code, _, _) = encact(&["plan", "--config", conf.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn infer_writes_report_and_records() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, _, err) = encact(&[
        "infer",
        "--activation",
        "square",
        "--samples",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["records"].as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(out.with_extension("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn gen_fixtures_then_infer_from_disk() {
    let dir = tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = encact(&[
        "gen-fixtures",
        "--network",
        "lenet5",
        "--seed",
        "5",
        "--out",
        d,
    ]);
    assert_eq!(code, 0, "{err}");
    // the manifest betas make relu_approx usable without --beta
    let from_disk = RunConfig {
        weights: Some(dir.path().to_path_buf()),
        seed: Some(5),
        ..lenet("relu_approx", 2)
    };
    let in_memory = RunConfig {
        seed: Some(5),
        ..lenet("relu_approx", 2)
    };
    let a = cmd_infer(&from_disk).unwrap();
    let b = cmd_infer(&in_memory).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.plan.bootstrap_count, 4);

    let wpath = Path::new(d).join("conv1.weight.csv");
    let text = fs::read_to_string(&wpath).unwrap();
    fs::write(&wpath, text.replacen('-', "+", 1)).unwrap();
    let (code, _, err) = encact(&["infer", "--weights", d]);
    assert_eq!(code, 3);
    assert!(err.contains("checksum"), "{err}");
}

#[test]
fn random_sampling_is_seeded() {
    let dir = tempdir().unwrap();
    let imgs: Vec<f64> = (0..20 * 784).map(|i| (i / 784) as f64).collect();
    let path = dir.path().join("batch.csv");
    encact_bench::write_tensor_csv(&path, &[20, 1, 28, 28], &imgs).unwrap();
    let cfg = RunConfig {
        inputs: Some(path),
        samples: Some(5),
        sample_mode: Some(SampleMode::Random),
        ..lenet("square", 5)
    };
    let net = builtin_lenet5(ActivationKind::Square);
    let a = load_dataset(&cfg, &net).unwrap();
    let b = load_dataset(&cfg, &net).unwrap();
    assert_eq!(a, b);
    let firsts: Vec<f64> = a.images.iter().map(|i| i[0]).collect();
    assert!(firsts.windows(2).all(|w| w[0] < w[1]));
    let first = load_dataset(
        &RunConfig {
            sample_mode: None,
            ..cfg.clone()
        },
        &net,
    )
    .unwrap();
    let firsts: Vec<f64> = first.images.iter().map(|i| i[0]).collect();
    assert_eq!(firsts, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    let err = load_dataset(
        &RunConfig {
            samples: Some(21),
            ..cfg
        },
        &net,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
