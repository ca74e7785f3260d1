use std::collections::BTreeSet;

use serde::Serialize;

use super::graph::{LayerKind, LayerSpec, NetworkSpec, Src};
use super::GraphError;
use crate::he_core::{HeError, SchemeParams};

/// Levels a layer consumes, activation included.
///
/// Average pooling is free: the window sum is rotate-and-add and the divisor
/// is folded into the next linear layer's plaintext weights.
pub fn layer_depth_cost(layer: &LayerSpec) -> u32 {
    let base = match layer.kind {
        LayerKind::Conv2d | LayerKind::FullyConnected | LayerKind::BatchnormFolded => 1,
        LayerKind::AvgPool2d | LayerKind::Flatten | LayerKind::ResidualAdd => 0,
    };
    base + layer.activation.depth_cost()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanStep {
    pub layer: String,
    /// Level of the input as it arrives, before any bootstrap.
    pub level_in: u32,
    pub level_out: u32,
    pub bootstrapped: bool,
}

/// Bootstrap sites in layer order. A site before a linear or pooling layer
/// refreshes that layer's input tensor in place; a site at a residual add
/// refreshes the sum before its activation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BootstrapPlan {
    pub insert_before: Vec<String>,
    pub predicted_depth_trace: Vec<PlanStep>,
    pub bootstrap_count: usize,
}

impl BootstrapPlan {
    /// A plan with the given sites; the trace is the simulated one, and
    /// simulation errors (such as running out of depth) are returned.
    pub fn with_sites(
        net: &NetworkSpec,
        params: &SchemeParams,
        sites: &[String],
    ) -> Result<Self, GraphError> {
        let set: BTreeSet<&str> = sites.iter().map(String::as_str).collect();
        let trace = walk(net, params, |_, _, _| false, &set)?;
        Ok(Self::from_trace(trace))
    }

    /// The sites only, with no predicted trace (for executing plans that
    /// are expected to fail).
    pub fn unchecked(sites: Vec<String>) -> Self {
        BootstrapPlan {
            bootstrap_count: sites.len(),
            insert_before: sites,
            predicted_depth_trace: Vec::new(),
        }
    }

    fn from_trace(trace: Vec<PlanStep>) -> Self {
        let insert_before: Vec<String> = trace
            .iter()
            .filter(|s| s.bootstrapped)
            .map(|s| s.layer.clone())
            .collect();
        BootstrapPlan {
            bootstrap_count: insert_before.len(),
            insert_before,
            predicted_depth_trace: trace,
        }
    }

    pub fn is_site(&self, layer: &str) -> bool {
        self.insert_before.iter().any(|s| s == layer)
    }

    /// The trace as CSV with header `layer,level_in,level_out,bootstrapped`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("layer,level_in,level_out,bootstrapped\n");
        for s in &self.predicted_depth_trace {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.layer, s.level_in, s.level_out, s.bootstrapped
            ));
        }
        out
    }
}

/// Greedy forward scan: bootstrap only when the next layer would run out of
/// depth. Fails with `UnschedulableLayer` if a layer alone exceeds the budget.
pub fn plan_bootstraps(
    net: &NetworkSpec,
    params: &SchemeParams,
) -> Result<BootstrapPlan, GraphError> {
    net.validate()?;
    let budget = params.depth_after_bootstrap;
    for l in &net.layers {
        let cost = layer_depth_cost(l);
        if cost > budget {
            return Err(GraphError::UnschedulableLayer {
                layer: l.name.clone(),
                cost,
                budget,
            });
        }
    }
    let trace = walk(net, params, |cost, level, _| cost > level, &BTreeSet::new())?;
    Ok(BootstrapPlan::from_trace(trace))
}

/// Simulates levels through the network. A bootstrap happens at a layer if
/// `greedy(cost, level, layer)` says so or the layer is in `forced`.
fn walk(
    net: &NetworkSpec,
    params: &SchemeParams,
    greedy: impl Fn(u32, u32, &LayerSpec) -> bool,
    forced: &BTreeSet<&str>,
) -> Result<Vec<PlanStep>, GraphError> {
    let full = params.depth_after_bootstrap;
    let mut input_level = full;
    let mut levels: Vec<u32> = Vec::with_capacity(net.layers.len());
    let mut trace = Vec::with_capacity(net.layers.len());
    for (i, l) in net.layers.iter().enumerate() {
        let src = net.input_of(i)?;
        let level_of = |levels: &[u32], s: Src| match s {
            Src::Input => input_level,
            Src::Layer(j) => levels[j],
        };
        let mut level_in = level_of(&levels, src);
        if let Some(other) = net.source_of(i)? {
            level_in = level_in.min(level_of(&levels, other));
        }
        let cost = layer_depth_cost(l);
        let bootstrapped = greedy(cost, level_in, l) || forced.contains(l.name.as_str());
        let start = if bootstrapped { full } else { level_in };
        if cost > start {
            return Err(GraphError::He(HeError::DepthExhausted {
                op: "layer",
                level: start,
                required: cost,
            }));
        }
        if bootstrapped && l.kind != LayerKind::ResidualAdd {
            match src {
                Src::Input => input_level = full,
                Src::Layer(j) => levels[j] = full,
            }
        }
        levels.push(start - cost);
        trace.push(PlanStep {
            layer: l.name.clone(),
            level_in,
            level_out: start - cost,
            bootstrapped,
        });
    }
    Ok(trace)
}
