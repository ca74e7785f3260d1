//! Deterministic fixture weights and the `manifest.json` that accompanies a
//! weight directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use encact::activations::ActivationKind;
use encact::netgraph::{expected_tensors, plaintext_forward, NetworkSpec, WeightStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csv_io::export_weights_csv;
use crate::error::BenchError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Inputs drawn for beta calibration.
pub const CALIBRATION_SAMPLES: usize = 128;
/// Margin applied to the largest observed pre-activation magnitude.
pub const CALIBRATION_MARGIN: f64 = 1.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

/// Index of a weight directory. `betas` maps activated layer names to their
/// input scaling; `metadata` is free-form (seed, training details).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub network: String,
    pub tensors: Vec<ManifestEntry>,
    #[serde(default)]
    pub betas: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Manifest {
    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.tensors.iter().find(|e| e.name == name)
    }

    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| BenchError::io(path, e))?;
        if let Some((layer, b)) = m.betas.iter().find(|(_, b)| !(b.is_finite() && **b > 0.0)) {
            return Err(BenchError::io(
                path,
                format!("beta for {layer} must be positive, got {b}"),
            ));
        }
        Ok(m)
    }

    pub fn read_if_present(dir: &Path) -> Result<Option<Self>, BenchError> {
        let path = dir.join(MANIFEST_FILE);
        if path.exists() {
            Self::read(&path).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Pseudo-random weights for `net`: He-normal weights (std sqrt(2/fan_in)),
/// batchnorm scales near 1, and small biases.
pub fn fixture_weights(seed: u64, net: &NetworkSpec) -> Result<WeightStore, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::new();
    for (name, shape) in expected_tensors(net) {
        let n: usize = shape.iter().product();
        let (mean, std) = if name.ends_with(".bias") {
            (0.0, 0.01)
        } else if shape.len() == 1 {
            (1.0, 0.1)
        } else {
            (0.0, (2.0 / (n / shape[0]) as f64).sqrt())
        };
        let dist = Normal::new(mean, std).expect("finite std");
        let values = (0..n).map(|_| dist.sample(&mut rng)).collect();
        store.insert(&name, shape, values)?;
    }
    Ok(store)
}

/// Per-site beta: the margin times the largest |pre-activation| seen with
/// exact ReLU over uniform [0, 1] inputs, and never below 1.
pub fn calibrate_betas(
    seed: u64,
    net: &NetworkSpec,
    weights: &WeightStore,
) -> Result<BTreeMap<String, f64>, BenchError> {
    let mut relu_net = net.clone();
    for l in &mut relu_net.layers {
        if !l.activation.is_identity() {
            l.activation = ActivationKind::ReluSwitch;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca1b_4a7e);
    let numel: usize = net.input_shape.iter().product();
    let images: Vec<Vec<f64>> = (0..CALIBRATION_SAMPLES)
        .map(|_| (0..numel).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    // max is order independent, so the parallel reduction is deterministic
    let peaks = images
        .par_iter()
        .map(|image| {
            let mut peak: BTreeMap<String, f64> = BTreeMap::new();
            plaintext_forward(&relu_net, weights, image, true, &mut |layer, pre| {
                let m = pre.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let slot = peak.entry(layer.name.clone()).or_insert(0.0);
                *slot = slot.max(m);
            })?;
            Ok(peak)
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    let mut peak: BTreeMap<String, f64> = BTreeMap::new();
    for (k, m) in peaks.into_iter().flatten() {
        let slot = peak.entry(k).or_insert(0.0);
        *slot = slot.max(m);
    }
    Ok(peak
        .into_iter()
        .map(|(k, m)| (k, (CALIBRATION_MARGIN * m).max(1.0)))
        .collect())
}

/// Fixture weights and their calibrated betas, without touching disk.
pub fn fixtures_in_memory(
    seed: u64,
    net: &NetworkSpec,
) -> Result<(WeightStore, BTreeMap<String, f64>), BenchError> {
    let weights = fixture_weights(seed, net)?;
    let betas = calibrate_betas(seed, net, &weights)?;
    Ok((weights, betas))
}

/// Writes fixture CSVs and `manifest.json` into `out_dir`. The same seed and
/// network always produce byte-identical files.
pub fn gen_fixtures(seed: u64, net: &NetworkSpec, out_dir: &Path) -> Result<Manifest, BenchError> {
    let (weights, betas) = fixtures_in_memory(seed, net)?;
    let files = export_weights_csv(&weights, out_dir)?;
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        network: net.name.clone(),
        tensors: files
            .into_iter()
            .map(|(name, file, sha256)| ManifestEntry {
                shape: weights.get(&name).expect("exported tensor").shape.clone(),
                name,
                file,
                sha256,
            })
            .collect(),
        betas,
        metadata: serde_json::json!({ "generator": "gen-fixtures", "seed": seed }),
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| BenchError::io(&path, e))?;
    Ok(manifest)
}
