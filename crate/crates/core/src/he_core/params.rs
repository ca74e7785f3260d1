use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{op, HeError};

/// Identifies the parameter set a ciphertext was produced under.
///
/// Derived from the parameter contents, so two engines built from equal
/// parameters produce interoperable ciphertexts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ParamsId(pub u64);

/// Scheme parameters of the emulated leveled engine.
///
/// The JSON form uses exactly these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub ring_dimension: usize,
    pub slot_count: usize,
    pub depth_after_bootstrap: u32,
    #[serde(default = "default_gate_precision_bits")]
    pub gate_precision_bits: u32,
    #[serde(default = "default_gate_range")]
    pub gate_range: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_cost_table")]
    pub cost_table: BTreeMap<String, f64>,
}

fn default_gate_precision_bits() -> u32 {
    16
}

fn default_gate_range() -> f64 {
    64.0
}

/// Abstract cost units per primitive. Gate entries are per active slot.
pub fn default_cost_table() -> BTreeMap<String, f64> {
    [
        (op::MULT_CT, 10.0),
        (op::MULT_PT, 4.0),
        (op::ADD, 1.0),
        (op::ROTATE, 8.0),
        (op::BOOTSTRAP, 1000.0),
        (op::GATE_SWITCH, 2.0),
        (op::GATE_COMPARE, 5.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl SchemeParams {
    /// Parameter profile used for LeNet-5: N = 2^14, 8192 slots, 10 levels.
    pub fn lenet() -> Self {
        Self::with_ring_dimension(16384)
    }

    /// Parameter profile used for ResNet-20: N = 2^15, 16384 slots, 10 levels.
    pub fn resnet() -> Self {
        Self::with_ring_dimension(32768)
    }

    fn with_ring_dimension(ring_dimension: usize) -> Self {
        SchemeParams {
            ring_dimension,
            slot_count: ring_dimension / 2,
            depth_after_bootstrap: 10,
            gate_precision_bits: default_gate_precision_bits(),
            gate_range: default_gate_range(),
            noise_sigma: 0.0,
            cost_table: default_cost_table(),
        }
    }

    pub fn validate(&self) -> Result<(), HeError> {
        let bad = |msg: String| Err(HeError::InvalidParams(msg));
        if self.ring_dimension < 2 || !self.ring_dimension.is_power_of_two() {
            return bad(format!(
                "ring_dimension {} is not a power of two >= 2",
                self.ring_dimension
            ));
        }
        if self.slot_count != self.ring_dimension / 2 {
            return bad(format!(
                "slot_count {} must equal ring_dimension/2 = {}",
                self.slot_count,
                self.ring_dimension / 2
            ));
        }
        if self.depth_after_bootstrap < 1 {
            return bad("depth_after_bootstrap must be at least 1".into());
        }
        if !(2..=32).contains(&self.gate_precision_bits) {
            return bad(format!(
                "gate_precision_bits {} outside 2..=32",
                self.gate_precision_bits
            ));
        }
        if !(self.gate_range.is_finite() && self.gate_range > 0.0) {
            return bad(format!("gate_range {} must be positive", self.gate_range));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise_sigma {} must be non-negative",
                self.noise_sigma
            ));
        }
        if let Some((name, cost)) = self
            .cost_table
            .iter()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return bad(format!("cost_table[{name}] = {cost} must be non-negative"));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, HeError> {
        let params: SchemeParams =
            serde_json::from_str(text).map_err(|e| HeError::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, HeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HeError::InvalidParams(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn id(&self) -> ParamsId {
        let mut h = DefaultHasher::new();
        self.ring_dimension.hash(&mut h);
        self.slot_count.hash(&mut h);
        self.depth_after_bootstrap.hash(&mut h);
        self.gate_precision_bits.hash(&mut h);
        self.gate_range.to_bits().hash(&mut h);
        self.noise_sigma.to_bits().hash(&mut h);
        for (k, v) in &self.cost_table {
            k.hash(&mut h);
            v.to_bits().hash(&mut h);
        }
        ParamsId(h.finish())
    }

    /// Cost of one unit of `op`; primitives missing from the table are free.
    pub fn cost_of(&self, op: &str) -> f64 {
        self.cost_table.get(op).copied().unwrap_or(0.0)
    }

    /// Largest positive quantized gate value, 2^(p-1) - 1.
    pub fn gate_max(&self) -> i64 {
        (1i64 << (self.gate_precision_bits - 1)) - 1
    }

    pub fn gate_min(&self) -> i64 {
        -(1i64 << (self.gate_precision_bits - 1))
    }

    /// Real value of one quantization step, R / 2^(p-1).
    pub fn gate_step(&self) -> f64 {
        self.gate_range / (1u64 << (self.gate_precision_bits - 1)) as f64
    }

    /// Gate-domain integer for `x`: round half away from zero, then saturate.
    pub fn quantize(&self, x: f64) -> i64 {
        let scaled = (x / self.gate_step()).round();
        if scaled.is_nan() {
            return 0;
        }
        scaled.clamp(self.gate_min() as f64, self.gate_max() as f64) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_match_parameter_table() {
        let l = SchemeParams::lenet();
        assert_eq!(
            (l.ring_dimension, l.slot_count, l.depth_after_bootstrap),
            (16384, 8192, 10)
        );
        let r = SchemeParams::resnet();
        assert_eq!(
            (r.ring_dimension, r.slot_count, r.depth_after_bootstrap),
            (32768, 16384, 10)
        );
        l.validate().unwrap();
        r.validate().unwrap();
    }

    #[test]
    fn json_field_names_round_trip() {
        let p = SchemeParams::lenet();
        let text = serde_json::to_string(&p).unwrap();
        for field in [
            "ring_dimension",
            "slot_count",
            "depth_after_bootstrap",
            "gate_precision_bits",
            "gate_range",
            "noise_sigma",
            "cost_table",
        ] {
            assert!(text.contains(&format!("\"{field}\"")), "{field} missing");
        }
        assert_eq!(SchemeParams::from_json_str(&text).unwrap(), p);
    }

    #[test]
    fn rejects_inconsistent_slot_count() {
        let mut p = SchemeParams::lenet();
        p.slot_count = 4096;
        assert!(matches!(p.validate(), Err(HeError::InvalidParams(_))));
        let mut p = SchemeParams::lenet();
        p.depth_after_bootstrap = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"ring_dimension":16,"slot_count":8,"depth_after_bootstrap":3,"levels":2}"#;
        assert!(SchemeParams::from_json_str(text).is_err());
    }

    #[test]
    fn gate_step_defaults() {
        let p = SchemeParams::lenet();
        assert_eq!(p.gate_step(), 64.0 / 32768.0);
        assert_eq!(p.gate_max(), 32767);
        assert_eq!(p.gate_min(), -32768);
    }

    #[test]
    fn id_tracks_contents() {
        assert_eq!(SchemeParams::lenet().id(), SchemeParams::lenet().id());
        assert_ne!(SchemeParams::lenet().id(), SchemeParams::resnet().id());
    }
}
