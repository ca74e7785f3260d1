use std::fs;

use encact::netgraph::{LayerSpec, NetworkSpec, ParamsProfile};
use encact_bench::{load_weights_csv, read_tensor_csv, BenchError};
use tempfile::tempdir;

fn fc_net() -> NetworkSpec {
    NetworkSpec {
        name: "fc".into(),
        input_shape: [3, 1, 1],
        params_profile: ParamsProfile::Lenet,
        layers: vec![LayerSpec::fc("fc", 3, 2)],
    }
}

#[test]
fn two_by_three_loads() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("fc.weight.csv"), "2,3\n1,2,3\n4,5,6\n").unwrap();
    let w = load_weights_csv(dir.path(), &fc_net()).unwrap();
    let t = w.get("fc.weight").unwrap();
    assert_eq!(t.shape, vec![2, 3]);
    assert_eq!(t.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert!(w.get("fc.bias").is_none());
    assert_eq!(w.source_manifest().len(), 1);
}

#[test]
fn short_file_names_the_file() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("fc.weight.csv"), "2,3\n1,2,3\n4,5\n").unwrap();
    let err = load_weights_csv(dir.path(), &fc_net()).unwrap_err();
    assert!(matches!(err, BenchError::ShapeMismatch { .. }));
    assert!(err.to_string().contains("fc.weight.csv"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn wrong_header_shape_is_rejected() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("fc.weight.csv"), "3,2\n1,2\n3,4\n5,6\n").unwrap();
    let err = load_weights_csv(dir.path(), &fc_net()).unwrap_err();
    assert!(err.to_string().contains("fc.weight.csv"));
}

#[test]
fn non_numeric_cell_reports_line() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("fc.weight.csv"), "2,3\n1,2,3\n4,x,6\n").unwrap();
    let err = load_weights_csv(dir.path(), &fc_net()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("fc.weight.csv:3"), "{msg}");
    assert!(msg.contains("\"x\""), "{msg}");
}

#[test]
fn missing_file_is_named() {
    let dir = tempdir().unwrap();
    let err = load_weights_csv(dir.path(), &fc_net()).unwrap_err();
    assert!(err.to_string().contains("fc.weight.csv"));
}

#[test]
fn whitespace_and_bias() {
    let dir = tempdir().unwrap();
    fs::write(
        dir.path().join("fc.weight.csv"),
        " 2 , 3 \n 1, 2 ,3\n\n4,5,6 \n",
    )
    .unwrap();
    fs::write(dir.path().join("fc.bias.csv"), "2\n0.5,-1e-3\n").unwrap();
    let w = load_weights_csv(dir.path(), &fc_net()).unwrap();
    assert_eq!(w.get("fc.bias").unwrap().values, vec![0.5, -0.001]);
}

#[test]
fn manifest_checksum_is_enforced() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("fc.weight.csv"), "2,3\n1,2,3\n4,5,6\n").unwrap();
    fs::write(
        dir.path().join("manifest.json"),
        r#"{"schema_version":1,"network":"fc","tensors":[{"name":"fc.weight","file":"fc.weight.csv","shape":[2,3],"sha256":"00"}]}"#,
    )
    .unwrap();
    let err = load_weights_csv(dir.path(), &fc_net()).unwrap_err();
    assert!(matches!(err, BenchError::Checksum { .. }), "{err}");
}

#[test]
fn values_round_trip_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let values = vec![0.1, -1.0 / 3.0, 1e-300, f64::MAX, 2.5e17, -0.0];
    encact_bench::write_tensor_csv(&path, &[3, 2], &values).unwrap();
    let (shape, back, _) = read_tensor_csv(&path).unwrap();
    assert_eq!(shape, vec![3, 2]);
    for (a, b) in values.iter().zip(&back) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
