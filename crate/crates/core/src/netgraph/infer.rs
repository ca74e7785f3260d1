use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{LayerKind, LayerSpec, NetworkSpec, Src};
use super::packing::{BlockMap, Layout, LinearOp, PackedTensor};
use super::plan::{BootstrapPlan, PlanStep};
use super::weights::WeightStore;
use super::GraphError;
use crate::activations::{act_apply, ActivationKind};
use crate::cheb::schedule_counts;
use crate::he_core::{op, DiagonalUsage, Engine, OpLedger, SimdCiphertext};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub ledger: OpLedger,
    /// Bootstrap sites executed (a site refreshes every ciphertext of a tensor).
    pub bootstrap_count: usize,
    pub layer_trace: Vec<PlanStep>,
}

/// Input layout and the output layout of every layer.
pub fn layouts(net: &NetworkSpec, slot_count: usize) -> Result<(Layout, Vec<Layout>), GraphError> {
    let shapes = net.shapes()?;
    let input = Layout::compact(net.input_shape, slot_count)?;
    let mut out: Vec<Layout> = Vec::with_capacity(net.layers.len());
    for (i, l) in net.layers.iter().enumerate() {
        let src = match net.input_of(i)? {
            Src::Input => &input,
            Src::Layer(j) => &out[j],
        };
        let layout = match l.kind {
            LayerKind::Conv2d | LayerKind::FullyConnected => {
                Layout::compact(shapes[i], slot_count)?
            }
            LayerKind::BatchnormFolded => src.clone(),
            LayerKind::Flatten => src.flattened(),
            LayerKind::AvgPool2d => {
                if src.strides().is_none() {
                    return Err(GraphError::invalid(
                        &l.name,
                        "input layout has no uniform strides".into(),
                    ));
                }
                src.pooled(l.stride, shapes[i])
            }
            LayerKind::ResidualAdd => {
                let other = match net.source_of(i)?.expect("validated") {
                    Src::Input => &input,
                    Src::Layer(j) => &out[j],
                };
                if other != src {
                    return Err(GraphError::invalid(
                        &l.name,
                        "operands are packed differently".into(),
                    ));
                }
                src.clone()
            }
        };
        out.push(layout);
    }
    Ok((input, out))
}

fn in_shape(net: &NetworkSpec, shapes: &[[usize; 3]], src: Src) -> [usize; 3] {
    match src {
        Src::Input => net.input_shape,
        Src::Layer(j) => shapes[j],
    }
}

struct Runner<'a> {
    engine: &'a Engine,
    net: &'a NetworkSpec,
    weights: &'a WeightStore,
    shapes: Vec<[usize; 3]>,
    layouts: Vec<Layout>,
    input: PackedTensor,
    outputs: Vec<PackedTensor>,
}

impl Runner<'_> {
    fn get(&self, src: Src) -> &PackedTensor {
        match src {
            Src::Input => &self.input,
            Src::Layer(j) => &self.outputs[j],
        }
    }

    fn get_mut(&mut self, src: Src) -> &mut PackedTensor {
        match src {
            Src::Input => &mut self.input,
            Src::Layer(j) => &mut self.outputs[j],
        }
    }

    fn linear(
        &self,
        i: usize,
        l: &LayerSpec,
        x: &PackedTensor,
    ) -> Result<PackedTensor, GraphError> {
        let src = self.net.input_of(i)?;
        let op = LinearOp::new(l, in_shape(self.net, &self.shapes, src), self.shapes[i]);
        let wref = l.weights_ref.as_deref().expect("validated");
        let w = self.weights.weight(wref)?;
        let bias = self.weights.bias(wref);
        let out_layout = &self.layouts[i];
        let mut cts = Vec::with_capacity(out_layout.ct_count());
        for to in 0..out_layout.ct_count() {
            let mut acc: Option<SimdCiphertext> = None;
            for (from, ct) in x.ciphertexts.iter().enumerate() {
                let map = BlockMap {
                    op: &op,
                    in_layout: &x.layout,
                    out_layout,
                    from,
                    to,
                    weights: Some((&w.values, x.pending_scale)),
                };
                // with no contributing input at all, the first block still
                // runs so the (all-zero) output lands at the right level
                let last_chance = acc.is_none() && from + 1 == x.ciphertexts.len();
                if !map.has_entries() && !last_chance {
                    continue;
                }
                let part = self.engine.linear_transform(ct, &map)?;
                acc = Some(match acc {
                    None => part,
                    Some(a) => self.engine.add(&a, &part)?,
                });
            }
            let mut ct = acc.expect("at least one block runs");
            if let Some(b) = bias {
                let mut pt = vec![0.0; ct.len()];
                for (o, (g, s)) in out_layout.positions().iter().enumerate() {
                    if *g == to {
                        pt[*s] = b.values[op.out_channel(o)];
                    }
                }
                ct = self.engine.add_plain(&ct, &pt)?;
            }
            cts.push(ct);
        }
        Ok(PackedTensor {
            ciphertexts: cts,
            layout: out_layout.clone(),
            pending_scale: 1.0,
        })
    }

    fn pool(&self, i: usize, l: &LayerSpec, x: &PackedTensor) -> Result<PackedTensor, GraphError> {
        let (row, col) = x.layout.strides().expect("checked when building layouts");
        let window_sum = |ct: &SimdCiphertext, step: usize| -> Result<SimdCiphertext, GraphError> {
            let mut acc = ct.clone();
            for d in 1..l.kernel {
                let r = self.engine.rotate(ct, (d * step) as i64)?;
                acc = self.engine.add(&acc, &r)?;
            }
            Ok(acc)
        };
        let cts = x
            .ciphertexts
            .iter()
            .map(|ct| window_sum(&window_sum(ct, col)?, row))
            .collect::<Result<_, _>>()?;
        Ok(PackedTensor {
            ciphertexts: cts,
            layout: self.layouts[i].clone(),
            pending_scale: x.pending_scale / (l.kernel * l.kernel) as f64,
        })
    }

    fn bootstrap(&self, x: &PackedTensor) -> Result<PackedTensor, GraphError> {
        Ok(PackedTensor {
            ciphertexts: x
                .ciphertexts
                .iter()
                .map(|c| self.engine.bootstrap(c))
                .collect::<Result<_, _>>()?,
            layout: x.layout.clone(),
            pending_scale: x.pending_scale,
        })
    }

    fn activate(&self, kind: &ActivationKind, x: PackedTensor) -> Result<PackedTensor, GraphError> {
        if kind.is_identity() {
            return Ok(x);
        }
        let cts = x
            .ciphertexts
            .iter()
            .map(|c| act_apply(self.engine, kind, c, c.len()))
            .collect::<Result<_, _>>()?;
        Ok(PackedTensor {
            ciphertexts: cts,
            ..x
        })
    }
}

fn aligned_level(t: &PackedTensor, layer: &str) -> Result<u32, GraphError> {
    t.level().ok_or_else(|| {
        GraphError::PlanMismatch(format!("ciphertexts of {layer} sit at different levels"))
    })
}

/// Encrypts `image`, runs the network under `plan` and decrypts the logits.
///
/// The report's ledger holds everything `engine` recorded since its last
/// [`Engine::take_ledger`], so use one engine per image for per-image costs.
pub fn run_inference(
    engine: &Engine,
    net: &NetworkSpec,
    weights: &WeightStore,
    image: &[f64],
    plan: &BootstrapPlan,
) -> Result<(Vec<f64>, CostReport), GraphError> {
    net.validate()?;
    weights.validate_for(net)?;
    let expected: usize = net.input_shape.iter().product();
    if image.len() != expected {
        return Err(GraphError::InputShape {
            expected,
            got: image.len(),
        });
    }
    let (input_layout, layouts) = layouts(net, engine.params().slot_count)?;
    let input = PackedTensor {
        ciphertexts: input_layout
            .scatter(image)
            .iter()
            .map(|v| engine.encode_encrypt(v))
            .collect::<Result<_, _>>()?,
        layout: input_layout,
        pending_scale: 1.0,
    };
    let mut run = Runner {
        engine,
        net,
        weights,
        shapes: net.shapes()?,
        layouts,
        input,
        outputs: Vec::with_capacity(net.layers.len()),
    };
    let mut trace = Vec::with_capacity(net.layers.len());
    let mut sites = 0;
    for (i, l) in net.layers.iter().enumerate() {
        let src = net.input_of(i)?;
        let site = plan.is_site(&l.name);
        sites += usize::from(site);
        let mut level_in = aligned_level(run.get(src), &l.name)?;
        let out = if l.kind == LayerKind::ResidualAdd {
            let other = net.source_of(i)?.expect("validated");
            level_in = level_in.min(aligned_level(run.get(other), &l.name)?);
            let (a, b) = (run.get(src), run.get(other));
            let mut sum = PackedTensor {
                ciphertexts: a
                    .ciphertexts
                    .iter()
                    .zip(&b.ciphertexts)
                    .map(|(x, y)| engine.add(x, y))
                    .collect::<Result<_, _>>()?,
                layout: a.layout.clone(),
                pending_scale: a.pending_scale,
            };
            if site {
                sum = run.bootstrap(&sum)?;
            }
            run.activate(&l.activation, sum)?
        } else {
            if site {
                let refreshed = run.bootstrap(run.get(src))?;
                *run.get_mut(src) = refreshed;
            }
            let x = run.get(src).clone();
            let y = match l.kind {
                LayerKind::Conv2d | LayerKind::FullyConnected | LayerKind::BatchnormFolded => {
                    run.linear(i, l, &x)?
                }
                LayerKind::AvgPool2d => run.pool(i, l, &x)?,
                LayerKind::Flatten => PackedTensor {
                    layout: run.layouts[i].clone(),
                    ..x
                },
                LayerKind::ResidualAdd => unreachable!(),
            };
            run.activate(&l.activation, y)?
        };
        let step = PlanStep {
            layer: l.name.clone(),
            level_in,
            level_out: aligned_level(&out, &l.name)?,
            bootstrapped: site,
        };
        if let Some(predicted) = plan.predicted_depth_trace.get(i) {
            if *predicted != step {
                return Err(GraphError::PlanMismatch(format!(
                    "layer {}: predicted {predicted:?}, executed {step:?}",
                    l.name
                )));
            }
        }
        trace.push(step);
        run.outputs.push(out);
    }
    if sites != plan.bootstrap_count {
        return Err(GraphError::PlanMismatch(format!(
            "plan counts {} bootstrap sites but {sites} were executed",
            plan.bootstrap_count
        )));
    }
    let last = run.outputs.last().expect("validated non-empty");
    let slots: Vec<Vec<f64>> = last
        .ciphertexts
        .iter()
        .map(|c| engine.decrypt_decode(c))
        .collect();
    let logits = last
        .layout
        .gather(&slots)
        .into_iter()
        .map(|v| v * last.pending_scale)
        .collect();
    Ok((
        logits,
        CostReport {
            ledger: engine.take_ledger(),
            bootstrap_count: sites,
            layer_trace: trace,
        },
    ))
}

/// Operation counts of one inference under `plan`, derived from the network
/// structure alone. Covers every op except `add`, whose count depends on
/// which biases are present.
pub fn predict_op_counts(
    net: &NetworkSpec,
    slot_count: usize,
    plan: &BootstrapPlan,
) -> Result<BTreeMap<&'static str, u64>, GraphError> {
    let shapes = net.shapes()?;
    let (input, layouts) = layouts(net, slot_count)?;
    let mut counts: BTreeMap<&'static str, u64> = BTreeMap::new();
    let mut bump = |op: &'static str, n: u64| *counts.entry(op).or_insert(0) += n;
    bump(op::ENCRYPT, input.ct_count() as u64);
    let layout_of = |src: Src| match src {
        Src::Input => &input,
        Src::Layer(j) => &layouts[j],
    };
    for (i, l) in net.layers.iter().enumerate() {
        let src = net.input_of(i)?;
        let x = layout_of(src);
        let out = &layouts[i];
        if plan.is_site(&l.name) {
            let refreshed = if l.kind == LayerKind::ResidualAdd {
                out
            } else {
                x
            };
            bump(op::BOOTSTRAP, refreshed.ct_count() as u64);
        }
        match l.kind {
            LayerKind::Conv2d | LayerKind::FullyConnected | LayerKind::BatchnormFolded => {
                let lin = LinearOp::new(l, in_shape(net, &shapes, src), shapes[i]);
                for to in 0..out.ct_count() {
                    let mut any = false;
                    for from in 0..x.ct_count() {
                        let map = BlockMap {
                            op: &lin,
                            in_layout: x,
                            out_layout: out,
                            from,
                            to,
                            weights: None,
                        };
                        let last_chance = !any && from + 1 == x.ct_count();
                        if map.has_entries() || last_chance {
                            any = true;
                            let u = DiagonalUsage::of(&map);
                            bump(op::MULT_PT, u.diagonals);
                            bump(op::ROTATE, u.rotations);
                        }
                    }
                }
            }
            LayerKind::AvgPool2d => {
                bump(op::ROTATE, (2 * (l.kernel - 1) * x.ct_count()) as u64);
            }
            LayerKind::Flatten | LayerKind::ResidualAdd => {}
        }
        for len in out.ct_lens() {
            let len = *len as u64;
            match &l.activation {
                ActivationKind::Identity => {}
                ActivationKind::Square => bump(op::MULT_CT, 1),
                ActivationKind::ReluSwitch => {
                    bump(op::MULT_CT, 1);
                    bump(op::ENCRYPT, 1);
                    bump(op::GATE_SWITCH, 3 * len);
                    bump(op::GATE_COMPARE, len);
                }
                ActivationKind::ReluApprox(cfg) => {
                    let s = schedule_counts(cfg.degree());
                    bump(op::MULT_CT, s.mult_ct);
                    bump(op::MULT_PT, s.mult_pt + u64::from(cfg.scales_input()));
                }
            }
        }
    }
    Ok(counts)
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    best
}
