use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    op, GateCiphertext, GateEncoding, HeError, OpLedger, ParamsId, SchemeParams, SimdCiphertext,
};

/// A sparse linear map from the slots of one ciphertext to the slots of
/// another, evaluated with the diagonal (rotate, multiply, accumulate) method.
pub trait SlotLinearMap {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    /// Calls `f(out_slot, in_slot, weight)` for every structural entry.
    ///
    /// Entries must be reported regardless of the weight's value so that the
    /// diagonal count depends only on structure.
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, f64));
}

/// Evaluator for emulated ciphertexts.
///
/// Holds the scheme parameters, the op ledger and the perturbation RNG. All
/// operations take `&self`; the ledger is internally synchronized.
pub struct Engine {
    params: SchemeParams,
    id: ParamsId,
    ledger: Mutex<OpLedger>,
    rng: Mutex<ChaCha8Rng>,
    noise: Option<Normal<f64>>,
}

impl Engine {
    pub fn new(params: SchemeParams) -> Result<Self, HeError> {
        Self::with_seed(params, 0)
    }

    /// Seed drives the Gaussian perturbation only; with `noise_sigma == 0`
    /// results do not depend on it.
    pub fn with_seed(params: SchemeParams, seed: u64) -> Result<Self, HeError> {
        params.validate()?;
        let noise = if params.noise_sigma > 0.0 {
            Some(
                Normal::new(0.0, params.noise_sigma)
                    .map_err(|e| HeError::InvalidParams(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Engine {
            id: params.id(),
            params,
            ledger: Mutex::new(OpLedger::new()),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            noise,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn params_id(&self) -> ParamsId {
        self.id
    }

    pub fn max_level(&self) -> u32 {
        self.params.depth_after_bootstrap
    }

    /// Snapshot of the ledger.
    pub fn ledger(&self) -> OpLedger {
        self.ledger.lock().expect("ledger poisoned").clone()
    }

    /// Returns the ledger and resets it.
    pub fn take_ledger(&self) -> OpLedger {
        std::mem::take(&mut *self.ledger.lock().expect("ledger poisoned"))
    }

    fn charge(&self, op: &'static str, count: u64, before: u32, after: u32) {
        let cost = self.params.cost_of(op);
        self.ledger
            .lock()
            .expect("ledger poisoned")
            .record(op, count, cost, before, after);
    }

    fn charge_silent(&self, op: &'static str, count: u64) {
        let cost = self.params.cost_of(op);
        self.ledger
            .lock()
            .expect("ledger poisoned")
            .record_silent(op, count, cost);
    }

    fn perturb(&self, slots: &mut [f64]) -> f64 {
        let Some(dist) = self.noise else {
            return 0.0;
        };
        let mut rng = self.rng.lock().expect("rng poisoned");
        for s in slots.iter_mut() {
            *s += dist.sample(&mut *rng);
        }
        self.params.noise_sigma
    }

    fn check_own(&self, ct: &SimdCiphertext) -> Result<(), HeError> {
        if ct.params_id != self.id {
            return Err(HeError::ParamsMismatch);
        }
        Ok(())
    }

    fn check_pair(&self, a: &SimdCiphertext, b: &SimdCiphertext) -> Result<(), HeError> {
        self.check_own(a)?;
        self.check_own(b)?;
        if a.len() != b.len() {
            return Err(HeError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(())
    }

    fn check_plain(ct: &SimdCiphertext, pt: &[f64]) -> Result<(), HeError> {
        if ct.len() != pt.len() {
            return Err(HeError::LengthMismatch {
                left: ct.len(),
                right: pt.len(),
            });
        }
        Ok(())
    }

    fn require_level(op: &'static str, level: u32) -> Result<(), HeError> {
        if level == 0 {
            return Err(HeError::DepthExhausted {
                op,
                level,
                required: 1,
            });
        }
        Ok(())
    }

    fn derive(&self, slots: Vec<f64>, level: u32, lineage_noise: f64) -> SimdCiphertext {
        SimdCiphertext {
            slots,
            level,
            params_id: self.id,
            lineage_noise,
        }
    }

    /// Encodes `values` into a fresh ciphertext at full level.
    pub fn encode_encrypt(&self, values: &[f64]) -> Result<SimdCiphertext, HeError> {
        if values.is_empty() {
            return Err(HeError::Degenerate("cannot encrypt an empty vector"));
        }
        if values.len() > self.params.slot_count {
            return Err(HeError::CapacityExceeded {
                len: values.len(),
                capacity: self.params.slot_count,
            });
        }
        let mut slots = values.to_vec();
        let noise = self.perturb(&mut slots);
        let level = self.max_level();
        self.charge(op::ENCRYPT, 1, level, level);
        Ok(self.derive(slots, level, noise))
    }

    pub fn decrypt_decode(&self, ct: &SimdCiphertext) -> Vec<f64> {
        ct.slots.clone()
    }

    fn zip_with(
        &self,
        a: &SimdCiphertext,
        b: &SimdCiphertext,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SimdCiphertext, HeError> {
        self.check_pair(a, b)?;
        let level = a.level.min(b.level);
        let slots = a
            .slots
            .iter()
            .zip(&b.slots)
            .map(|(x, y)| f(*x, *y))
            .collect();
        self.charge(op::ADD, 1, level, level);
        Ok(self.derive(slots, level, a.lineage_noise + b.lineage_noise))
    }

    fn map_plain(
        &self,
        a: &SimdCiphertext,
        f: impl Fn(usize, f64) -> f64,
    ) -> Result<SimdCiphertext, HeError> {
        self.check_own(a)?;
        let slots = a.slots.iter().enumerate().map(|(i, x)| f(i, *x)).collect();
        self.charge(op::ADD, 1, a.level, a.level);
        Ok(self.derive(slots, a.level, a.lineage_noise))
    }

    pub fn add(&self, a: &SimdCiphertext, b: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
        self.zip_with(a, b, |x, y| x + y)
    }

    pub fn sub(&self, a: &SimdCiphertext, b: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
        self.zip_with(a, b, |x, y| x - y)
    }

    pub fn add_plain(&self, a: &SimdCiphertext, pt: &[f64]) -> Result<SimdCiphertext, HeError> {
        Self::check_plain(a, pt)?;
        self.map_plain(a, |i, x| x + pt[i])
    }

    pub fn sub_plain(&self, a: &SimdCiphertext, pt: &[f64]) -> Result<SimdCiphertext, HeError> {
        Self::check_plain(a, pt)?;
        self.map_plain(a, |i, x| x - pt[i])
    }

    /// `pt - a`.
    pub fn plain_sub(&self, pt: &[f64], a: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
        Self::check_plain(a, pt)?;
        self.map_plain(a, |i, x| pt[i] - x)
    }

    pub fn add_scalar(&self, a: &SimdCiphertext, c: f64) -> Result<SimdCiphertext, HeError> {
        self.map_plain(a, |_, x| x + c)
    }

    /// Ciphertext-ciphertext product; consumes one level.
    pub fn mult(&self, a: &SimdCiphertext, b: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
        self.check_pair(a, b)?;
        let before = a.level.min(b.level);
        Self::require_level(op::MULT_CT, before)?;
        let mut slots: Vec<f64> = a.slots.iter().zip(&b.slots).map(|(x, y)| x * y).collect();
        let noise = self.perturb(&mut slots);
        self.charge(op::MULT_CT, 1, before, before - 1);
        Ok(self.derive(slots, before - 1, a.lineage_noise + b.lineage_noise + noise))
    }

    fn mult_plain_with(
        &self,
        a: &SimdCiphertext,
        f: impl Fn(usize, f64) -> f64,
    ) -> Result<SimdCiphertext, HeError> {
        self.check_own(a)?;
        Self::require_level(op::MULT_PT, a.level)?;
        let mut slots: Vec<f64> = a.slots.iter().enumerate().map(|(i, x)| f(i, *x)).collect();
        let noise = self.perturb(&mut slots);
        self.charge(op::MULT_PT, 1, a.level, a.level - 1);
        Ok(self.derive(slots, a.level - 1, a.lineage_noise + noise))
    }

    /// Slot-wise product with a plaintext vector; consumes one level.
    pub fn mult_plain(&self, a: &SimdCiphertext, pt: &[f64]) -> Result<SimdCiphertext, HeError> {
        Self::check_plain(a, pt)?;
        self.mult_plain_with(a, |i, x| x * pt[i])
    }

    /// Product with a scalar constant; consumes one level.
    pub fn mult_scalar(&self, a: &SimdCiphertext, c: f64) -> Result<SimdCiphertext, HeError> {
        self.mult_plain_with(a, |_, x| x * c)
    }

    /// Cyclic left rotation: slot i receives slot (i + k) mod len.
    pub fn rotate(&self, ct: &SimdCiphertext, k: i64) -> Result<SimdCiphertext, HeError> {
        self.check_own(ct)?;
        let n = ct.len() as i64;
        let shift = k.rem_euclid(n) as usize;
        let mut slots = ct.slots.clone();
        slots.rotate_left(shift);
        self.charge(op::ROTATE, 1, ct.level, ct.level);
        Ok(self.derive(slots, ct.level, ct.lineage_noise))
    }

    /// Restores the level to `depth_after_bootstrap`.
    pub fn bootstrap(&self, ct: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
        self.check_own(ct)?;
        let mut slots = ct.slots.clone();
        let noise = self.perturb(&mut slots);
        let level = self.max_level();
        self.charge(op::BOOTSTRAP, 1, ct.level, level);
        Ok(self.derive(slots, level, ct.lineage_noise + noise))
    }

    /// Widens a ciphertext to `len` slots; the new slots hold zero.
    ///
    /// Unused CKKS slots are zero, so this only changes bookkeeping.
    pub fn zero_extend(&self, ct: &SimdCiphertext, len: usize) -> Result<SimdCiphertext, HeError> {
        self.check_own(ct)?;
        if len < ct.len() || len > self.params.slot_count {
            return Err(HeError::LengthMismatch {
                left: ct.len(),
                right: len,
            });
        }
        let mut slots = ct.slots.clone();
        slots.resize(len, 0.0);
        Ok(self.derive(slots, ct.level, ct.lineage_noise))
    }

    /// Switches the first `n` slots into the gate domain.
    ///
    /// Values are quantized to `gate_precision_bits` over `[-R, R]` with
    /// round-half-away-from-zero and saturate at the range ends. The switch
    /// is charged per slot because the gate domain has no SIMD batching.
    pub fn switch_to_gate(&self, ct: &SimdCiphertext, n: usize) -> Result<GateCiphertext, HeError> {
        self.check_own(ct)?;
        if n == 0 {
            return Err(HeError::Degenerate(
                "switch_to_gate needs at least one active slot",
            ));
        }
        if n > ct.len() {
            return Err(HeError::LengthMismatch {
                left: ct.len(),
                right: n,
            });
        }
        let values = ct.slots[..n]
            .iter()
            .map(|x| self.params.quantize(*x))
            .collect();
        self.charge(op::GATE_SWITCH, n as u64, ct.level, ct.level);
        Ok(GateCiphertext {
            values,
            encoding: GateEncoding::Quantized,
            params_id: self.id,
        })
    }

    /// Slot i of the result is 1 when `a_i < b_i`, else 0, for i < n.
    pub fn gate_compare_less(
        &self,
        a: &GateCiphertext,
        b: &GateCiphertext,
        n: usize,
    ) -> Result<GateCiphertext, HeError> {
        if a.params_id != self.id || b.params_id != self.id {
            return Err(HeError::ParamsMismatch);
        }
        if a.len() != b.len() {
            return Err(HeError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if n == 0 {
            return Err(HeError::Degenerate(
                "gate_compare_less needs at least one slot",
            ));
        }
        if n > a.len() {
            return Err(HeError::LengthMismatch {
                left: a.len(),
                right: n,
            });
        }
        let values = a.values[..n]
            .iter()
            .zip(&b.values[..n])
            .map(|(x, y)| i64::from(x < y))
            .collect();
        // gate-domain values carry no level, so no trace entry
        self.charge_silent(op::GATE_COMPARE, n as u64);
        Ok(GateCiphertext {
            values,
            encoding: GateEncoding::Indicator,
            params_id: self.id,
        })
    }

    /// Switches a gate ciphertext back to the SIMD domain at `level`.
    pub fn switch_to_simd(
        &self,
        gc: &GateCiphertext,
        level: u32,
    ) -> Result<SimdCiphertext, HeError> {
        if gc.params_id != self.id {
            return Err(HeError::ParamsMismatch);
        }
        if gc.is_empty() {
            return Err(HeError::Degenerate(
                "switch_to_simd needs at least one active slot",
            ));
        }
        if level > self.max_level() {
            return Err(HeError::InvalidLevel {
                level,
                max: self.max_level(),
            });
        }
        let step = self.params.gate_step();
        let slots = match gc.encoding {
            GateEncoding::Quantized => gc.values.iter().map(|q| *q as f64 * step).collect(),
            GateEncoding::Indicator => gc.values.iter().map(|q| *q as f64).collect(),
        };
        self.charge(op::GATE_SWITCH, gc.len() as u64, level, level);
        Ok(self.derive(slots, level, 0.0))
    }

    /// Evaluates `map` on `ct` as Σ_r P_r ⊙ rot(ct, r).
    ///
    /// Each distinct diagonal costs one plaintext multiplication and, unless
    /// r = 0, one rotation; the partial products are summed at the same level,
    /// so the whole transform consumes exactly one level.
    pub fn linear_transform(
        &self,
        ct: &SimdCiphertext,
        map: &dyn SlotLinearMap,
    ) -> Result<SimdCiphertext, HeError> {
        self.check_own(ct)?;
        if map.input_len() != ct.len() {
            return Err(HeError::LengthMismatch {
                left: ct.len(),
                right: map.input_len(),
            });
        }
        let out_len = map.output_len();
        if out_len == 0 {
            return Err(HeError::Degenerate("linear map with empty output"));
        }
        if out_len > self.params.slot_count {
            return Err(HeError::CapacityExceeded {
                len: out_len,
                capacity: self.params.slot_count,
            });
        }
        Self::require_level(op::MULT_PT, ct.level)?;
        let width = ct.len().max(out_len);
        let mut used = vec![false; width];
        let mut acc = vec![0.0; out_len];
        map.for_each_entry(&mut |o, i, w| {
            used[(i + width - o) % width] = true;
            acc[o] += w * ct.slots[i];
        });
        let DiagonalUsage {
            diagonals,
            rotations,
        } = DiagonalUsage::from_flags(&used);
        let noise = self.perturb(&mut acc);
        let level = ct.level - 1;
        self.charge_silent(op::ROTATE, rotations);
        self.charge_silent(op::ADD, diagonals - 1);
        self.charge(op::MULT_PT, diagonals, ct.level, level);
        Ok(self.derive(acc, level, ct.lineage_noise + noise))
    }
}

/// Diagonal and rotation counts of a slot linear map under the diagonal method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagonalUsage {
    pub diagonals: u64,
    pub rotations: u64,
}

impl DiagonalUsage {
    /// Counts the diagonals `map` touches. Only the sparsity pattern matters,
    /// not the weights.
    pub fn of(map: &dyn SlotLinearMap) -> Self {
        let width = map.input_len().max(map.output_len());
        let mut used = vec![false; width];
        map.for_each_entry(&mut |o, i, _| used[(i + width - o) % width] = true);
        Self::from_flags(&used)
    }

    fn from_flags(used: &[bool]) -> Self {
        let used_count = used.iter().filter(|u| **u).count() as u64;
        DiagonalUsage {
            diagonals: used_count.max(1),
            rotations: used_count - u64::from(used[0]),
        }
    }
}
