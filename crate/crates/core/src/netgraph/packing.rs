use super::graph::{LayerKind, LayerSpec};
use super::GraphError;
use crate::he_core::{SimdCiphertext, SlotLinearMap};

/// Where each element of a (C, H, W) tensor lives: `positions[idx]` is the
/// (ciphertext, slot) of logical index `idx = (c·H + y)·W + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    shape: [usize; 3],
    positions: Vec<(usize, usize)>,
    ct_lens: Vec<usize>,
}

impl Layout {
    /// Channel-major packing: whole channels, row-major, as many per
    /// ciphertext as fit.
    pub fn compact(shape: [usize; 3], slot_count: usize) -> Result<Self, GraphError> {
        let [c, h, w] = shape;
        let plane = h * w;
        if plane == 0 || c == 0 {
            return Err(GraphError::Invalid(format!("empty tensor shape {shape:?}")));
        }
        if plane > slot_count {
            return Err(GraphError::Invalid(format!(
                "a {h}x{w} channel does not fit in {slot_count} slots"
            )));
        }
        let per_ct = slot_count / plane;
        let positions = (0..c * plane)
            .map(|idx| {
                let (ch, off) = (idx / plane, idx % plane);
                (ch / per_ct, (ch % per_ct) * plane + off)
            })
            .collect();
        let ct_lens = (0..c.div_ceil(per_ct))
            .map(|g| (c - g * per_ct).min(per_ct) * plane)
            .collect();
        Ok(Layout {
            shape,
            positions,
            ct_lens,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn ct_count(&self) -> usize {
        self.ct_lens.len()
    }

    pub fn ct_lens(&self) -> &[usize] {
        &self.ct_lens
    }

    pub fn numel(&self) -> usize {
        self.positions.len()
    }

    /// Slot offsets between horizontally and vertically adjacent elements,
    /// if they are the same everywhere.
    pub fn strides(&self) -> Option<(usize, usize)> {
        let [c, h, w] = self.shape;
        let at = |ch: usize, y: usize, x: usize| self.positions[(ch * h + y) * w + x];
        let row = if h > 1 {
            at(0, 1, 0).1.checked_sub(at(0, 0, 0).1)?
        } else {
            0
        };
        let col = if w > 1 {
            at(0, 0, 1).1.checked_sub(at(0, 0, 0).1)?
        } else {
            0
        };
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let (ct, s) = at(ch, y, x);
                    if x + 1 < w && at(ch, y, x + 1) != (ct, s + col) {
                        return None;
                    }
                    if y + 1 < h && at(ch, y + 1, x) != (ct, s + row) {
                        return None;
                    }
                }
            }
        }
        Some((row, col))
    }

    /// Layout after a k×k stride-s window sum that leaves each result at
    /// the slot of its window's top-left element.
    pub fn pooled(&self, stride: usize, out: [usize; 3]) -> Self {
        let [_, h, w] = self.shape;
        let [c, oh, ow] = out;
        let mut positions = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for y in 0..oh {
                for x in 0..ow {
                    positions.push(self.positions[(ch * h + y * stride) * w + x * stride]);
                }
            }
        }
        Layout {
            shape: out,
            positions,
            ct_lens: self.ct_lens.clone(),
        }
    }

    pub fn flattened(&self) -> Self {
        let n = self.numel();
        Layout {
            shape: [n, 1, 1],
            positions: self.positions.clone(),
            ct_lens: self.ct_lens.clone(),
        }
    }

    /// Logical tensor from decrypted ciphertext slots.
    pub fn gather(&self, slots: &[Vec<f64>]) -> Vec<f64> {
        self.positions
            .iter()
            .map(|(ct, s)| slots[*ct][*s])
            .collect()
    }

    /// Per-ciphertext slot vectors holding `values` (zeros elsewhere).
    pub fn scatter(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.ct_lens.iter().map(|n| vec![0.0; *n]).collect();
        for ((ct, s), v) in self.positions.iter().zip(values) {
            out[*ct][*s] = *v;
        }
        out
    }
}

/// Logical entries of a linear layer: `(out_idx, in_idx, weight_idx)` where
/// the indices are logical tensor indices and `weight_idx` indexes the flat
/// weight tensor.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LinearOp {
    kind: LayerKind,
    in_shape: [usize; 3],
    out_shape: [usize; 3],
    kernel: usize,
    stride: usize,
    padding: usize,
}

impl LinearOp {
    pub(crate) fn new(l: &LayerSpec, in_shape: [usize; 3], out_shape: [usize; 3]) -> Self {
        LinearOp {
            kind: l.kind,
            in_shape,
            out_shape,
            kernel: l.kernel,
            stride: l.stride,
            padding: l.padding,
        }
    }

    pub(crate) fn for_each(&self, f: &mut dyn FnMut(usize, usize, usize)) {
        let [ci_n, h, w] = self.in_shape;
        let [co_n, oh, ow] = self.out_shape;
        match self.kind {
            LayerKind::Conv2d => {
                let k = self.kernel;
                for co in 0..co_n {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let o = (co * oh + oy) * ow + ox;
                            for ci in 0..ci_n {
                                for ky in 0..k {
                                    let Some(iy) =
                                        (oy * self.stride + ky).checked_sub(self.padding)
                                    else {
                                        continue;
                                    };
                                    if iy >= h {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let Some(ix) =
                                            (ox * self.stride + kx).checked_sub(self.padding)
                                        else {
                                            continue;
                                        };
                                        if ix >= w {
                                            continue;
                                        }
                                        let i = (ci * h + iy) * w + ix;
                                        f(o, i, ((co * ci_n + ci) * k + ky) * k + kx);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            LayerKind::FullyConnected => {
                let n_in = ci_n * h * w;
                for o in 0..co_n {
                    for i in 0..n_in {
                        f(o, i, o * n_in + i);
                    }
                }
            }
            LayerKind::BatchnormFolded => {
                let plane = h * w;
                for idx in 0..ci_n * plane {
                    f(idx, idx, idx / plane);
                }
            }
            _ => unreachable!("not a linear layer"),
        }
    }

    /// Output channel of a logical output index (for bias lookup).
    pub(crate) fn out_channel(&self, o: usize) -> usize {
        let [_, oh, ow] = self.out_shape;
        o / (oh * ow)
    }
}

/// The part of a linear layer that maps input ciphertext `from` to output
/// ciphertext `to`, in slot coordinates.
pub(crate) struct BlockMap<'a> {
    pub op: &'a LinearOp,
    pub in_layout: &'a Layout,
    pub out_layout: &'a Layout,
    pub from: usize,
    pub to: usize,
    /// Flat weights and a multiplier; `None` gives unit weights (structure only).
    pub weights: Option<(&'a [f64], f64)>,
}

impl BlockMap<'_> {
    pub(crate) fn has_entries(&self) -> bool {
        let mut any = false;
        self.for_each_entry(&mut |_, _, _| any = true);
        any
    }
}

impl SlotLinearMap for BlockMap<'_> {
    fn input_len(&self) -> usize {
        self.in_layout.ct_lens[self.from]
    }

    fn output_len(&self) -> usize {
        self.out_layout.ct_lens[self.to]
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        self.op.for_each(&mut |o, i, wi| {
            let (oc, os) = self.out_layout.positions[o];
            if oc != self.to {
                return;
            }
            let (ic, is) = self.in_layout.positions[i];
            if ic != self.from {
                return;
            }
            let w = self.weights.map_or(1.0, |(ws, scale)| ws[wi] * scale);
            f(os, is, w);
        });
    }
}

/// An encrypted tensor. Values decode as slot · `pending_scale`; the scale
/// is left behind by average pooling and absorbed by the next linear layer.
#[derive(Clone, Debug)]
pub struct PackedTensor {
    pub ciphertexts: Vec<SimdCiphertext>,
    pub layout: Layout,
    pub pending_scale: f64,
}

impl PackedTensor {
    pub fn logical_shape(&self) -> [usize; 3] {
        self.layout.shape
    }

    /// Common level of the ciphertexts, or `None` if they disagree.
    pub fn level(&self) -> Option<u32> {
        let first = self.ciphertexts.first()?.level();
        self.ciphertexts
            .iter()
            .all(|c| c.level() == first)
            .then_some(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_layout_is_bijective() {
        let l = Layout::compact([5, 3, 4], 30).unwrap();
        assert_eq!(l.ct_count(), 3);
        assert_eq!(l.ct_lens(), &[24, 24, 12]);
        let mut seen = std::collections::HashSet::new();
        for p in l.positions() {
            assert!(p.1 < l.ct_lens()[p.0]);
            assert!(seen.insert(*p));
        }
        assert_eq!(l.strides(), Some((4, 1)));
        assert!(Layout::compact([1, 8, 8], 32).is_err());
    }

    #[test]
    fn pooled_layout_keeps_top_left_slots() {
        let l = Layout::compact([2, 4, 4], 64).unwrap();
        let p = l.pooled(2, [2, 2, 2]);
        assert_eq!(p.positions()[..4], [(0, 0), (0, 2), (0, 8), (0, 10)]);
        assert_eq!(p.positions()[4], (0, 16));
        assert_eq!(p.strides(), Some((8, 2)));
        let v: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(p.gather(&p.scatter(&v)), v);
    }
}
