//! Plaintext forward pass written with direct loops, independent of the
//! packing code, used as the oracle for encrypted inference.

use super::graph::{LayerKind, LayerSpec, NetworkSpec, Src};
use super::weights::WeightStore;
use super::GraphError;
use crate::activations::act_plain;

/// Logits of `net` on `image` in plain arithmetic.
///
/// With `exact_relu` both ReLU kinds are the true ReLU; otherwise they
/// reproduce what the encrypted pipeline computes (the Chebyshev series, or
/// the quantized sign decision of the scheme switch).
pub fn plaintext_reference(
    net: &NetworkSpec,
    weights: &WeightStore,
    image: &[f64],
    exact_relu: bool,
) -> Result<Vec<f64>, GraphError> {
    plaintext_forward(net, weights, image, exact_relu, &mut |_, _| {})
}

/// Like [`plaintext_reference`], calling `observe` with each activated
/// layer's pre-activation values.
pub fn plaintext_forward(
    net: &NetworkSpec,
    weights: &WeightStore,
    image: &[f64],
    exact_relu: bool,
    observe: &mut dyn FnMut(&LayerSpec, &[f64]),
) -> Result<Vec<f64>, GraphError> {
    net.validate()?;
    weights.validate_for(net)?;
    let expected: usize = net.input_shape.iter().product();
    if image.len() != expected {
        return Err(GraphError::InputShape {
            expected,
            got: image.len(),
        });
    }
    let shapes = net.shapes()?;
    let params = net.params();
    let mut outs: Vec<Vec<f64>> = Vec::with_capacity(net.layers.len());
    for (i, l) in net.layers.iter().enumerate() {
        let fetch = |s: Src| -> (&[f64], [usize; 3]) {
            match s {
                Src::Input => (image, net.input_shape),
                Src::Layer(j) => (&outs[j], shapes[j]),
            }
        };
        let (x, [c, h, w]) = fetch(net.input_of(i)?);
        let [oc, oh, ow] = shapes[i];
        let mut y = match l.kind {
            LayerKind::Conv2d => {
                let wt = weights.weight(l.weights_ref.as_deref().expect("validated"))?;
                let k = l.kernel;
                let mut y = vec![0.0; oc * oh * ow];
                for o in 0..oc {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut s = 0.0;
                            for ci in 0..c {
                                for ky in 0..k {
                                    for kx in 0..k {
                                        let iy = (oy * l.stride + ky) as isize - l.padding as isize;
                                        let ix = (ox * l.stride + kx) as isize - l.padding as isize;
                                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize
                                        {
                                            continue;
                                        }
                                        let xv = x[(ci * h + iy as usize) * w + ix as usize];
                                        s += wt.values[((o * c + ci) * k + ky) * k + kx] * xv;
                                    }
                                }
                            }
                            y[(o * oh + oy) * ow + ox] = s;
                        }
                    }
                }
                y
            }
            LayerKind::FullyConnected => {
                let wt = weights.weight(l.weights_ref.as_deref().expect("validated"))?;
                (0..oc)
                    .map(|o| {
                        wt.values[o * x.len()..(o + 1) * x.len()]
                            .iter()
                            .zip(x)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            }
            LayerKind::BatchnormFolded => {
                let wt = weights.weight(l.weights_ref.as_deref().expect("validated"))?;
                x.iter()
                    .enumerate()
                    .map(|(idx, v)| v * wt.values[idx / (h * w)])
                    .collect()
            }
            LayerKind::AvgPool2d => {
                let k = l.kernel;
                let mut y = vec![0.0; oc * oh * ow];
                for ch in 0..oc {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut s = 0.0;
                            for ky in 0..k {
                                for kx in 0..k {
                                    s += x[(ch * h + oy * l.stride + ky) * w + ox * l.stride + kx];
                                }
                            }
                            y[(ch * oh + oy) * ow + ox] = s / (k * k) as f64;
                        }
                    }
                }
                y
            }
            LayerKind::Flatten => x.to_vec(),
            LayerKind::ResidualAdd => {
                let (other, _) = fetch(net.source_of(i)?.expect("validated"));
                x.iter().zip(other).map(|(a, b)| a + b).collect()
            }
        };
        if let Some(b) = l.weights_ref.as_deref().and_then(|r| weights.bias(r)) {
            let plane = oh * ow;
            for (idx, v) in y.iter_mut().enumerate() {
                *v += b.values[idx / plane];
            }
        }
        if !l.activation.is_identity() {
            observe(l, &y);
            for v in &mut y {
                *v = act_plain(&l.activation, *v, exact_relu, &params);
            }
        }
        outs.push(y);
    }
    Ok(outs.pop().expect("validated non-empty"))
}
