use super::ParamsId;

/// Emulated CKKS-style ciphertext: the slot vector plus level bookkeeping.
///
/// Values are immutable; every engine operation returns a new ciphertext.
#[derive(Clone, Debug, PartialEq)]
pub struct SimdCiphertext {
    pub(crate) slots: Vec<f64>,
    pub(crate) level: u32,
    pub(crate) params_id: ParamsId,
    pub(crate) lineage_noise: f64,
}

impl SimdCiphertext {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Remaining multiplicative depth.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn params_id(&self) -> ParamsId {
        self.params_id
    }

    /// Accumulated magnitude of injected perturbation (informational).
    pub fn lineage_noise(&self) -> f64 {
        self.lineage_noise
    }

    /// Slot contents. Only meaningful to the key holder; exposed for tests
    /// and level-free inspection.
    pub fn peek_slots(&self) -> &[f64] {
        &self.slots
    }
}

/// How the integers in a [`GateCiphertext`] are to be read back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateEncoding {
    /// Fixed-point value q · R / 2^(p-1).
    Quantized,
    /// Boolean 0/1 produced by a comparison.
    Indicator,
}

/// Emulated TFHE-style ciphertext: one quantized integer per active slot.
#[derive(Clone, Debug, PartialEq)]
pub struct GateCiphertext {
    pub(crate) values: Vec<i64>,
    pub(crate) encoding: GateEncoding,
    pub(crate) params_id: ParamsId,
}

impl GateCiphertext {
    /// Builds a gate ciphertext directly from quantized integers.
    pub fn from_quantized(values: Vec<i64>, encoding: GateEncoding, params_id: ParamsId) -> Self {
        GateCiphertext {
            values,
            encoding,
            params_id,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn quantized(&self) -> &[i64] {
        &self.values
    }

    pub fn encoding(&self) -> GateEncoding {
        self.encoding
    }

    pub fn params_id(&self) -> ParamsId {
        self.params_id
    }
}
