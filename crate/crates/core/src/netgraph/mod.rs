//! Network graphs, slot packing, depth planning and encrypted inference.

mod builtin;
mod graph;
mod infer;
mod packing;
mod plan;
mod reference;
mod weights;

use thiserror::Error;

use crate::he_core::HeError;

pub use builtin::{builtin, builtin_lenet5, builtin_resnet20};
pub use graph::{LayerKind, LayerSpec, NetworkSpec, ParamsProfile, Src};
pub use infer::{argmax, layouts, predict_op_counts, run_inference, CostReport};
pub use packing::{Layout, PackedTensor};
pub use plan::{layer_depth_cost, plan_bootstraps, BootstrapPlan, PlanStep};
pub use reference::{plaintext_forward, plaintext_reference};
pub use weights::{expected_tensors, SourceFile, Tensor, WeightStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("layer {layer} needs {cost} levels but a bootstrap only restores {budget}")]
    UnschedulableLayer {
        layer: String,
        cost: u32,
        budget: u32,
    },
    #[error("missing weight tensor {0}")]
    MissingWeight(String),
    #[error("weight tensor {name} has shape {got:?}, expected {expected:?}")]
    WeightShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("input has {got} values, expected {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("network JSON: {0}")]
    Json(String),
    #[error("execution diverged from the plan: {0}")]
    PlanMismatch(String),
    #[error(transparent)]
    He(#[from] HeError),
}

impl GraphError {
    pub(crate) fn invalid(layer: &str, msg: String) -> Self {
        GraphError::Invalid(format!("layer {layer:?}: {msg}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{ActivationKind, ApproxReluConfig};
    use crate::he_core::{Engine, SchemeParams};

    fn approx(beta: f64) -> ActivationKind {
        ActivationKind::ReluApprox(ApproxReluConfig::new(beta, 50).unwrap())
    }

    #[test]
    fn lenet_shapes_and_sites() {
        let net = builtin_lenet5(ActivationKind::Square);
        net.validate().unwrap();
        assert_eq!(net.shapes().unwrap().last().unwrap(), &[10, 1, 1]);
        let sites = net
            .layers
            .iter()
            .filter(|l| !l.activation.is_identity())
            .count();
        assert_eq!(sites, 4);
    }

    #[test]
    fn resnet_topology() {
        let net = builtin_resnet20(ActivationKind::ReluSwitch).unwrap();
        net.validate().unwrap();
        assert_eq!(net.shapes().unwrap().last().unwrap(), &[10, 1, 1]);
        let convs = net
            .layers
            .iter()
            .filter(|l| l.kind == LayerKind::Conv2d)
            .count();
        assert_eq!(convs, 21);
        let acts = net
            .layers
            .iter()
            .filter(|l| !l.activation.is_identity())
            .count();
        assert_eq!(acts, 19);
        assert!(builtin_resnet20(ActivationKind::Square).is_err());
    }

    #[test]
    fn depth_cost_examples() {
        let conv = LayerSpec::conv("c", 1, 1, 3, 1, 1).with_activation(ActivationKind::ReluSwitch);
        assert_eq!(layer_depth_cost(&conv), 2);
        let fc = LayerSpec::fc("f", 4, 4).with_activation(approx(3.0));
        assert_eq!(layer_depth_cost(&fc), 10);
        assert_eq!(layer_depth_cost(&LayerSpec::residual_add("a", "x", "y")), 0);
    }

    #[test]
    fn lenet_bootstrap_counts() {
        let p = SchemeParams::lenet();
        for (kind, want) in [
            (ActivationKind::Square, 0),
            (ActivationKind::ReluSwitch, 0),
            (approx(4.0), 4),
        ] {
            let plan = plan_bootstraps(&builtin_lenet5(kind), &p).unwrap();
            assert_eq!(plan.bootstrap_count, want);
            assert_eq!(plan.insert_before.len(), want);
        }
    }

    #[test]
    fn unschedulable_layer() {
        let cfg = ActivationKind::ReluApprox(ApproxReluConfig::new(2.0, 64).unwrap());
        let net = NetworkSpec {
            name: "toy".into(),
            input_shape: [4, 1, 1],
            params_profile: ParamsProfile::Lenet,
            layers: vec![LayerSpec::fc("fc", 4, 4).with_activation(cfg)],
        };
        assert_eq!(layer_depth_cost(&net.layers[0]), 11);
        assert!(matches!(
            plan_bootstraps(&net, &SchemeParams::lenet()),
            Err(GraphError::UnschedulableLayer {
                cost: 11,
                budget: 10,
                ..
            })
        ));
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        let mut net = builtin_lenet5(ActivationKind::Square);
        net.layers[5].in_channels = 399;
        assert!(matches!(net.validate(), Err(GraphError::Invalid(_))));

        let mut net = builtin_lenet5(ActivationKind::Square);
        net.layers[0].weights_ref = None;
        assert!(net.validate().is_err());

        let mut net = builtin_lenet5(ActivationKind::Square);
        net.layers[1].activation = ActivationKind::Square;
        assert!(net.validate().is_err());

        let mut net = builtin_lenet5(ActivationKind::Square);
        net.layers[2].name = "conv1".into();
        assert!(net.validate().is_err());

        let mut net = builtin_lenet5(ActivationKind::Square);
        net.layers
            .insert(2, LayerSpec::residual_add("bad", "pool1", "pool1"));
        assert!(net.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        for net in [
            builtin_lenet5(approx(7.5)),
            builtin_resnet20(ActivationKind::ReluSwitch).unwrap(),
        ] {
            let back = NetworkSpec::from_json_str(&net.to_json()).unwrap();
            assert_eq!(back, net);
        }
        assert!(NetworkSpec::from_json_str("{\"name\": 1}").is_err());
    }

    #[test]
    fn identity_fc_returns_input() {
        let net = NetworkSpec {
            name: "id".into(),
            input_shape: [5, 1, 1],
            params_profile: ParamsProfile::Lenet,
            layers: vec![LayerSpec::fc("fc", 5, 5)],
        };
        let mut w = WeightStore::new();
        let mut eye = vec![0.0; 25];
        for i in 0..5 {
            eye[i * 6] = 1.0;
        }
        w.insert("fc.weight", vec![5, 5], eye).unwrap();
        let e = Engine::new(SchemeParams::lenet()).unwrap();
        let plan = plan_bootstraps(&net, e.params()).unwrap();
        let x = [0.5, -1.0, 2.0, 0.0, 3.25];
        let (logits, report) = run_inference(&e, &net, &w, &x, &plan).unwrap();
        for (a, b) in logits.iter().zip(x) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(report.bootstrap_count, 0);
    }

    #[test]
    fn missing_weight_and_bad_input() {
        let net = builtin_lenet5(ActivationKind::Square);
        let e = Engine::new(SchemeParams::lenet()).unwrap();
        let plan = plan_bootstraps(&net, e.params()).unwrap();
        let err = run_inference(&e, &net, &WeightStore::new(), &[0.0; 784], &plan).unwrap_err();
        assert_eq!(err, GraphError::MissingWeight("conv1.weight".into()));
        let mut w = WeightStore::new();
        w.insert("x", vec![2, 3], vec![0.0; 5]).unwrap_err();
        w.insert("x", vec![2, 3], vec![0.0; 6]).unwrap();
        assert!(w.insert("x", vec![6], vec![0.0; 6]).is_err());
    }
}
