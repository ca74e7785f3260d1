use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::activations::ActivationKind;
use crate::he_core::SchemeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv2d,
    #[serde(rename = "avgpool2d")]
    AvgPool2d,
    FullyConnected,
    BatchnormFolded,
    ResidualAdd,
    Flatten,
}

impl LayerKind {
    pub fn is_linear(self) -> bool {
        matches!(
            self,
            LayerKind::Conv2d | LayerKind::FullyConnected | LayerKind::BatchnormFolded
        )
    }

    fn takes_weights(self) -> bool {
        self.is_linear()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsProfile {
    Lenet,
    Resnet,
}

impl ParamsProfile {
    pub fn params(self) -> SchemeParams {
        match self {
            ParamsProfile::Lenet => SchemeParams::lenet(),
            ParamsProfile::Resnet => SchemeParams::resnet(),
        }
    }
}

/// One layer. For fully connected layers `in_channels`/`out_channels` are
/// the feature counts. `input` names the layer feeding this one (default:
/// the previous layer); `source` is the second operand of a residual add.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub activation: ActivationKind,
    pub weights_ref: Option<String>,
    pub input: Option<String>,
    pub source: Option<String>,
}

impl LayerSpec {
    fn bare(name: &str, kind: LayerKind) -> Self {
        LayerSpec {
            name: name.to_string(),
            kind,
            in_channels: 0,
            out_channels: 0,
            kernel: 0,
            stride: 0,
            padding: 0,
            activation: ActivationKind::Identity,
            weights_ref: None,
            input: None,
            source: None,
        }
    }

    pub fn conv(
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        LayerSpec {
            in_channels: cin,
            out_channels: cout,
            kernel,
            stride,
            padding,
            weights_ref: Some(name.to_string()),
            ..Self::bare(name, LayerKind::Conv2d)
        }
    }

    pub fn avgpool(name: &str, kernel: usize, stride: usize) -> Self {
        LayerSpec {
            kernel,
            stride,
            ..Self::bare(name, LayerKind::AvgPool2d)
        }
    }

    pub fn fc(name: &str, inputs: usize, outputs: usize) -> Self {
        LayerSpec {
            in_channels: inputs,
            out_channels: outputs,
            weights_ref: Some(name.to_string()),
            ..Self::bare(name, LayerKind::FullyConnected)
        }
    }

    pub fn batchnorm(name: &str, channels: usize) -> Self {
        LayerSpec {
            in_channels: channels,
            out_channels: channels,
            weights_ref: Some(name.to_string()),
            ..Self::bare(name, LayerKind::BatchnormFolded)
        }
    }

    pub fn residual_add(name: &str, input: &str, source: &str) -> Self {
        LayerSpec {
            input: Some(input.to_string()),
            source: Some(source.to_string()),
            ..Self::bare(name, LayerKind::ResidualAdd)
        }
    }

    pub fn flatten(name: &str) -> Self {
        Self::bare(name, LayerKind::Flatten)
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_input(mut self, input: &str) -> Self {
        self.input = Some(input.to_string());
        self
    }
}

/// Where a layer reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Src {
    Input,
    Layer(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    pub params_profile: ParamsProfile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    name: String,
    kind: LayerKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    in_channels: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    out_channels: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    kernel: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    stride: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    padding: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    activation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    name: String,
    input_shape: [usize; 3],
    params_profile: ParamsProfile,
    layers: Vec<RawLayer>,
}

impl From<&LayerSpec> for RawLayer {
    fn from(l: &LayerSpec) -> Self {
        let (activation, beta, degree) = match &l.activation {
            ActivationKind::Identity => (None, None, None),
            ActivationKind::ReluApprox(cfg) => (
                Some("relu_approx".to_string()),
                Some(cfg.beta()),
                Some(cfg.degree()),
            ),
            other => (Some(other.tag().to_string()), None, None),
        };
        RawLayer {
            name: l.name.clone(),
            kind: l.kind,
            in_channels: l.in_channels,
            out_channels: l.out_channels,
            kernel: l.kernel,
            stride: l.stride,
            padding: l.padding,
            activation,
            beta,
            degree,
            weights_ref: l.weights_ref.clone(),
            input: l.input.clone(),
            source: l.source.clone(),
        }
    }
}

impl TryFrom<RawLayer> for LayerSpec {
    type Error = GraphError;

    fn try_from(r: RawLayer) -> Result<Self, GraphError> {
        let activation = match r.activation.as_deref() {
            None if r.beta.is_none() && r.degree.is_none() => ActivationKind::Identity,
            tag => ActivationKind::from_parts(tag.unwrap_or("identity"), r.beta, r.degree)
                .map_err(|e| GraphError::invalid(&r.name, e.to_string()))?,
        };
        Ok(LayerSpec {
            name: r.name,
            kind: r.kind,
            in_channels: r.in_channels,
            out_channels: r.out_channels,
            kernel: r.kernel,
            stride: r.stride,
            padding: r.padding,
            activation,
            weights_ref: r.weights_ref,
            input: r.input,
            source: r.source,
        })
    }
}

fn out_dim(size: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = size + 2 * padding;
    if kernel == 0 || stride == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

impl NetworkSpec {
    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let raw: RawNetwork =
            serde_json::from_str(s).map_err(|e| GraphError::Json(e.to_string()))?;
        let net = NetworkSpec {
            name: raw.name,
            input_shape: raw.input_shape,
            params_profile: raw.params_profile,
            layers: raw
                .layers
                .into_iter()
                .map(LayerSpec::try_from)
                .collect::<Result<_, _>>()?,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GraphError::Json(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        let raw = RawNetwork {
            name: self.name.clone(),
            input_shape: self.input_shape,
            params_profile: self.params_profile,
            layers: self.layers.iter().map(RawLayer::from).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("network serializes")
    }

    pub fn params(&self) -> SchemeParams {
        self.params_profile.params()
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    fn resolve(&self, at: usize, name: &str) -> Result<Src, GraphError> {
        match self.layers[..at].iter().position(|l| l.name == name) {
            Some(i) => Ok(Src::Layer(i)),
            None => Err(GraphError::invalid(
                &self.layers[at].name,
                format!("references unknown or later layer {name:?}"),
            )),
        }
    }

    /// Primary input of layer `i`.
    pub fn input_of(&self, i: usize) -> Result<Src, GraphError> {
        match &self.layers[i].input {
            Some(name) => self.resolve(i, name),
            None if i == 0 => Ok(Src::Input),
            None => Ok(Src::Layer(i - 1)),
        }
    }

    /// Second operand of a residual add.
    pub fn source_of(&self, i: usize) -> Result<Option<Src>, GraphError> {
        self.layers[i]
            .source
            .as_deref()
            .map(|name| self.resolve(i, name))
            .transpose()
    }

    /// Output shape (channels, height, width) of every layer; fully connected
    /// and flatten outputs are (n, 1, 1).
    pub fn shapes(&self) -> Result<Vec<[usize; 3]>, GraphError> {
        let mut shapes: Vec<[usize; 3]> = Vec::with_capacity(self.layers.len());
        let shape_of = |shapes: &[[usize; 3]], src: Src| match src {
            Src::Input => self.input_shape,
            Src::Layer(j) => shapes[j],
        };
        for (i, l) in self.layers.iter().enumerate() {
            let bad = |msg: String| GraphError::invalid(&l.name, msg);
            let [c, h, w] = shape_of(&shapes, self.input_of(i)?);
            let out = match l.kind {
                LayerKind::Conv2d => {
                    if l.in_channels != c {
                        return Err(bad(format!(
                            "expects {} input channels, got {c}",
                            l.in_channels
                        )));
                    }
                    let (Some(oh), Some(ow)) = (
                        out_dim(h, l.kernel, l.stride, l.padding),
                        out_dim(w, l.kernel, l.stride, l.padding),
                    ) else {
                        return Err(bad("kernel/stride/padding do not fit the input".into()));
                    };
                    if l.out_channels == 0 {
                        return Err(bad("out_channels must be positive".into()));
                    }
                    [l.out_channels, oh, ow]
                }
                LayerKind::AvgPool2d => {
                    if l.padding != 0 {
                        return Err(bad("pooling does not support padding".into()));
                    }
                    let (Some(oh), Some(ow)) = (
                        out_dim(h, l.kernel, l.stride, 0),
                        out_dim(w, l.kernel, l.stride, 0),
                    ) else {
                        return Err(bad("kernel/stride do not fit the input".into()));
                    };
                    [c, oh, ow]
                }
                LayerKind::FullyConnected => {
                    if l.in_channels != c * h * w {
                        return Err(bad(format!(
                            "expects {} inputs, got {}",
                            l.in_channels,
                            c * h * w
                        )));
                    }
                    if l.out_channels == 0 {
                        return Err(bad("out_channels must be positive".into()));
                    }
                    [l.out_channels, 1, 1]
                }
                LayerKind::BatchnormFolded => {
                    if l.in_channels != c {
                        return Err(bad(format!("expects {} channels, got {c}", l.in_channels)));
                    }
                    [c, h, w]
                }
                LayerKind::Flatten => [c * h * w, 1, 1],
                LayerKind::ResidualAdd => {
                    let Some(src) = self.source_of(i)? else {
                        return Err(bad("residual_add needs a source".into()));
                    };
                    let other = shape_of(&shapes, src);
                    if other != [c, h, w] {
                        return Err(bad(format!(
                            "operand shapes differ: {:?} vs {other:?}",
                            [c, h, w]
                        )));
                    }
                    [c, h, w]
                }
            };
            shapes.push(out);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.layers.is_empty() {
            return Err(GraphError::Invalid("network has no layers".into()));
        }
        if self.input_shape.contains(&0) {
            return Err(GraphError::Invalid(
                "input shape has a zero dimension".into(),
            ));
        }
        let mut seen = HashMap::new();
        for (i, l) in self.layers.iter().enumerate() {
            if l.name.is_empty() || l.name == "input" {
                return Err(GraphError::invalid(
                    &l.name,
                    "reserved or empty layer name".into(),
                ));
            }
            if seen.insert(l.name.as_str(), i).is_some() {
                return Err(GraphError::invalid(&l.name, "duplicate layer name".into()));
            }
            match (l.kind.takes_weights(), &l.weights_ref) {
                (true, None) => {
                    return Err(GraphError::invalid(&l.name, "missing weights_ref".into()))
                }
                (false, Some(_)) => {
                    return Err(GraphError::invalid(
                        &l.name,
                        "this layer kind takes no weights".into(),
                    ))
                }
                _ => {}
            }
            if l.source.is_some() != (l.kind == LayerKind::ResidualAdd) {
                return Err(GraphError::invalid(
                    &l.name,
                    "source is only valid on residual_add".into(),
                ));
            }
            if matches!(l.kind, LayerKind::AvgPool2d | LayerKind::Flatten)
                && !l.activation.is_identity()
            {
                return Err(GraphError::invalid(
                    &l.name,
                    "pooling and flatten take no activation".into(),
                ));
            }
        }
        self.shapes()?;
        self.check_pool_consumers()
    }

    /// The pooling divisor is deferred to the next linear layer (or the
    /// decoded output), so a pooled tensor may only flow into flatten,
    /// conv, fully connected or batchnorm layers.
    fn check_pool_consumers(&self) -> Result<(), GraphError> {
        let mut pending = vec![false; self.layers.len()];
        for (i, l) in self.layers.iter().enumerate() {
            let reads_pending = |src: Src| matches!(src, Src::Layer(j) if pending[j]);
            let from_input = reads_pending(self.input_of(i)?);
            let from_source = self.source_of(i)?.is_some_and(reads_pending);
            if (from_input && l.kind == LayerKind::ResidualAdd) || from_source {
                return Err(GraphError::invalid(
                    &l.name,
                    "a pooled tensor cannot feed a residual add".into(),
                ));
            }
            pending[i] = match l.kind {
                LayerKind::AvgPool2d => true,
                LayerKind::Flatten => from_input,
                _ => false,
            };
        }
        Ok(())
    }
}
