use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{LayerKind, NetworkSpec};
use super::GraphError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// A file a store was loaded from, with its SHA-256 in hex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceFile {
    pub path: String,
    pub sha256: String,
}

/// Named weight tensors, `<weights_ref>.weight` and optional `<weights_ref>.bias`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct WeightStore {
    tensors: BTreeMap<String, Tensor>,
    source_manifest: Vec<SourceFile>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        name: &str,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<(), GraphError> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(GraphError::WeightShape {
                name: name.to_string(),
                expected: shape,
                got: vec![values.len()],
            });
        }
        if self.tensors.contains_key(name) {
            return Err(GraphError::Invalid(format!(
                "duplicate weight tensor {name:?}"
            )));
        }
        self.tensors
            .insert(name.to_string(), Tensor { shape, values });
        Ok(())
    }

    pub fn record_source(&mut self, path: String, sha256: String) {
        self.source_manifest.push(SourceFile { path, sha256 });
    }

    pub fn source_manifest(&self) -> &[SourceFile] {
        &self.source_manifest
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub(crate) fn weight(&self, weights_ref: &str) -> Result<&Tensor, GraphError> {
        let name = format!("{weights_ref}.weight");
        self.get(&name).ok_or(GraphError::MissingWeight(name))
    }

    pub(crate) fn bias(&self, weights_ref: &str) -> Option<&Tensor> {
        self.get(&format!("{weights_ref}.bias"))
    }

    /// Checks that every weight the network needs is present with the right shape.
    pub fn validate_for(&self, net: &NetworkSpec) -> Result<(), GraphError> {
        for (name, shape) in expected_tensors(net) {
            match self.get(&name) {
                Some(t) if t.shape == shape => {}
                Some(t) => {
                    return Err(GraphError::WeightShape {
                        name,
                        expected: shape,
                        got: t.shape.clone(),
                    })
                }
                None if name.ends_with(".bias") => {}
                None => return Err(GraphError::MissingWeight(name)),
            }
        }
        Ok(())
    }
}

/// (name, shape) of every tensor a network reads; biases are optional.
/// Conv weights are (out, in, k, k), fully connected (out, in), batchnorm
/// scales (C); biases are (out).
pub fn expected_tensors(net: &NetworkSpec) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    for l in &net.layers {
        let Some(r) = &l.weights_ref else { continue };
        let weight = match l.kind {
            LayerKind::Conv2d => vec![l.out_channels, l.in_channels, l.kernel, l.kernel],
            LayerKind::FullyConnected => vec![l.out_channels, l.in_channels],
            LayerKind::BatchnormFolded => vec![l.in_channels],
            _ => continue,
        };
        out.push((format!("{r}.weight"), weight));
        out.push((format!("{r}.bias"), vec![l.out_channels]));
    }
    out
}
