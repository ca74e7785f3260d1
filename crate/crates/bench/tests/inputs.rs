use std::fs;

use encact_bench::inputs::{load_images, load_labels};
use tempfile::tempdir;

fn idx(magic: u32, dims: &[u32], body: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend(body);
    out
}

#[test]
fn idx_directory_with_labels() {
    let dir = tempdir().unwrap();
    let body: Vec<u8> = (0..3 * 4).map(|i| (i * 20) as u8).collect();
    fs::write(
        dir.path().join("t10k-images-idx3-ubyte"),
        idx(0x803, &[3, 2, 2], &body),
    )
    .unwrap();
    fs::write(
        dir.path().join("t10k-labels-idx1-ubyte"),
        idx(0x801, &[3], &[7, 0, 9]),
    )
    .unwrap();
    let ds = load_images(dir.path(), 4).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(
        ds.images[1],
        vec![80.0 / 255.0, 100.0 / 255.0, 120.0 / 255.0, 140.0 / 255.0]
    );
    assert_eq!(ds.labels, Some(vec![7, 0, 9]));
    assert!(load_images(dir.path(), 5).is_err());
}

#[test]
fn truncated_idx_is_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad-images-idx3-ubyte");
    fs::write(&path, idx(0x803, &[3, 2, 2], &[1, 2, 3])).unwrap();
    let err = load_images(&path, 4).unwrap_err();
    assert!(err.to_string().contains("bad-images-idx3-ubyte"));
    let labels = dir.path().join("l");
    fs::write(&labels, idx(0x801, &[2], &[1, 2])).unwrap();
    assert_eq!(load_labels(&labels).unwrap(), vec![1, 2]);
    assert!(load_images(&labels, 1).is_err());
}

#[test]
fn cifar_batches_carry_labels() {
    let dir = tempdir().unwrap();
    let mut bytes = Vec::new();
    for label in [3u8, 8] {
        bytes.push(label);
        bytes.extend(std::iter::repeat_n(label * 10, 3072));
    }
    fs::write(dir.path().join("test_batch.bin"), &bytes).unwrap();
    let ds = load_images(dir.path(), 3072).unwrap();
    assert_eq!(ds.labels, Some(vec![3, 8]));
    assert_eq!(ds.images[1][100], 80.0 / 255.0);
    fs::write(dir.path().join("test_batch.bin"), &bytes[..100]).unwrap();
    assert!(load_images(dir.path(), 3072).is_err());
}

#[test]
fn label_csv_must_hold_class_indices() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    fs::write(&path, "3\n1,2,0\n").unwrap();
    assert_eq!(load_labels(&path).unwrap(), vec![1, 2, 0]);
    fs::write(&path, "2\n1,2.5\n").unwrap();
    assert!(load_labels(&path).is_err());
}
