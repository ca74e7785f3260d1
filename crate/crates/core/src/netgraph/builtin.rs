use super::graph::{LayerSpec, NetworkSpec, ParamsProfile};
use super::GraphError;
use crate::activations::ActivationKind;

/// Canonical LeNet-5 on 1×28×28 inputs with four activation sites.
pub fn builtin_lenet5(activation: ActivationKind) -> NetworkSpec {
    let act = |l: LayerSpec| l.with_activation(activation.clone());
    NetworkSpec {
        name: "lenet5".into(),
        input_shape: [1, 28, 28],
        params_profile: ParamsProfile::Lenet,
        layers: vec![
            act(LayerSpec::conv("conv1", 1, 6, 5, 1, 2)),
            LayerSpec::avgpool("pool1", 2, 2),
            act(LayerSpec::conv("conv2", 6, 16, 5, 1, 0)),
            LayerSpec::avgpool("pool2", 2, 2),
            LayerSpec::flatten("flatten"),
            act(LayerSpec::fc("fc1", 400, 120)),
            act(LayerSpec::fc("fc2", 120, 84)),
            LayerSpec::fc("fc3", 84, 10),
        ],
    }
}

/// CIFAR ResNet-20 on 3×32×32 inputs, batch norm folded into the convs.
///
/// Each block is `conv_a (act) → conv_b → add(conv_b, shortcut) (act)`; the
/// first block of stages 2 and 3 uses a stride-2 `conv_a` and a strided 1×1
/// downsample conv on the shortcut.
pub fn builtin_resnet20(activation: ActivationKind) -> Result<NetworkSpec, GraphError> {
    if activation == ActivationKind::Square {
        return Err(GraphError::Invalid(
            "ResNet-20 with square activations does not train stably; use a ReLU variant".into(),
        ));
    }
    let act = |l: LayerSpec| l.with_activation(activation.clone());
    let mut layers = vec![act(LayerSpec::conv("stem", 3, 16, 3, 1, 1))];
    let mut block_input = "stem".to_string();
    let mut channels = 16;
    for stage in 1..=3 {
        let width = 16 << (stage - 1);
        for block in 1..=3 {
            let prefix = format!("s{stage}b{block}");
            let stride = if stage > 1 && block == 1 { 2 } else { 1 };
            layers.push(act(LayerSpec::conv(
                &format!("{prefix}_conv_a"),
                channels,
                width,
                3,
                stride,
                1,
            )
            .with_input(&block_input)));
            layers.push(LayerSpec::conv(
                &format!("{prefix}_conv_b"),
                width,
                width,
                3,
                1,
                1,
            ));
            let shortcut = if stride == 2 {
                let name = format!("{prefix}_down");
                layers.push(
                    LayerSpec::conv(&name, channels, width, 1, 2, 0).with_input(&block_input),
                );
                name
            } else {
                block_input.clone()
            };
            let add = format!("{prefix}_add");
            layers.push(act(LayerSpec::residual_add(
                &add,
                &format!("{prefix}_conv_b"),
                &shortcut,
            )));
            block_input = add;
            channels = width;
        }
    }
    layers.push(LayerSpec::avgpool("pool", 8, 8));
    layers.push(LayerSpec::flatten("flatten"));
    layers.push(LayerSpec::fc("fc", 64, 10));
    Ok(NetworkSpec {
        name: "resnet20".into(),
        input_shape: [3, 32, 32],
        params_profile: ParamsProfile::Resnet,
        layers,
    })
}

/// Looks a builtin up by name (`lenet5` or `resnet20`).
pub fn builtin(name: &str, activation: ActivationKind) -> Result<Option<NetworkSpec>, GraphError> {
    Ok(match name {
        "lenet5" | "lenet" => Some(builtin_lenet5(activation)),
        "resnet20" | "resnet" => Some(builtin_resnet20(activation)?),
        _ => None,
    })
}
