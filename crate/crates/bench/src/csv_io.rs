//! Tensor CSV files: the first line is the comma-separated shape, then the
//! row-major values with one innermost row per line. Values are written in
//! shortest round-trip form so files reload bit-exactly.

use std::fs;
use std::path::Path;

use encact::netgraph::{expected_tensors, NetworkSpec, WeightStore};
use sha2::{Digest, Sha256};

use crate::error::BenchError;
use crate::fixtures::Manifest;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn format_tensor_csv(shape: &[usize], values: &[f64]) -> String {
    let mut out = shape
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    let row = shape.last().copied().unwrap_or(1).max(1);
    for chunk in values.chunks(row) {
        out.push_str(
            &chunk
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

pub fn write_tensor_csv(
    path: &Path,
    shape: &[usize],
    values: &[f64],
) -> Result<String, BenchError> {
    let text = format_tensor_csv(shape, values);
    fs::write(path, &text).map_err(|e| BenchError::io(path, e))?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Parses a tensor file; returns (shape, values, sha256 of the bytes).
pub fn read_tensor_csv(path: &Path) -> Result<(Vec<usize>, Vec<f64>, String), BenchError> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    let parse_err = |line: usize, msg: String| BenchError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut shape: Option<Vec<usize>> = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match &shape {
            None => {
                let dims = record
                    .iter()
                    .map(|c| {
                        c.parse::<usize>()
                            .map_err(|_| parse_err(line, format!("bad shape entry {c:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                shape = Some(dims);
            }
            Some(_) => {
                for cell in record.iter() {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| parse_err(line, format!("non-numeric cell {cell:?}")))?;
                    values.push(v);
                }
            }
        }
    }
    let shape = shape.ok_or_else(|| parse_err(1, "missing shape header".into()))?;
    let expected: usize = shape.iter().product();
    if expected != values.len() {
        return Err(BenchError::ShapeMismatch {
            path: path.to_path_buf(),
            expected: shape,
            got: vec![values.len()],
        });
    }
    Ok((shape, values, sha256_hex(&bytes)))
}

/// Loads `<tensor>.csv` for every tensor `net` needs from `dir`. Bias files
/// are optional. If `dir/manifest.json` exists, every file it lists must
/// match its recorded checksum.
pub fn load_weights_csv(dir: &Path, net: &NetworkSpec) -> Result<WeightStore, BenchError> {
    let manifest = Manifest::read_if_present(dir)?;
    let mut store = WeightStore::new();
    for (name, shape) in expected_tensors(net) {
        if store.get(&name).is_some() {
            continue;
        }
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            if name.ends_with(".bias") {
                continue;
            }
            return Err(BenchError::io(&path, "missing weight file"));
        }
        let (got, values, sha) = read_tensor_csv(&path)?;
        if got != shape {
            return Err(BenchError::ShapeMismatch {
                path,
                expected: shape,
                got,
            });
        }
        if let Some(entry) = manifest.as_ref().and_then(|m| m.entry(&name)) {
            if entry.sha256 != sha {
                return Err(BenchError::Checksum { path });
            }
        }
        store.insert(&name, got, values)?;
        store.record_source(path.display().to_string(), sha);
    }
    Ok(store)
}

/// Writes every tensor of `store` as `<name>.csv` into `dir`; returns
/// (name, file name, sha256) per tensor.
pub fn export_weights_csv(
    store: &WeightStore,
    dir: &Path,
) -> Result<Vec<(String, String, String)>, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    store
        .tensors()
        .iter()
        .map(|(name, t)| {
            let file = format!("{name}.csv");
            let sha = write_tensor_csv(&dir.join(&file), &t.shape, &t.values)?;
            Ok((name.clone(), file, sha))
        })
        .collect()
}
