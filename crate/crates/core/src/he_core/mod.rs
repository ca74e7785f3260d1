//! Emulated leveled homomorphic arithmetic.
//!
//! A [`SimdCiphertext`] is its slot vector plus a remaining-depth counter;
//! there is no lattice arithmetic. Every multiplication (fused with its
//! rescale) consumes one level, [`Engine::bootstrap`] restores the level to
//! `depth_after_bootstrap`, and a multiplication attempted at level 0 fails
//! with [`HeError::DepthExhausted`]. A gate domain ([`GateCiphertext`])
//! models exact integer comparisons on quantized slots, with per-slot cost.

mod ciphertext;
mod engine;
mod ledger;
mod params;

use thiserror::Error;

pub use ciphertext::{GateCiphertext, GateEncoding, SimdCiphertext};
pub use engine::{DiagonalUsage, Engine, SlotLinearMap};
pub use ledger::{OpLedger, TraceEntry};
pub use params::{default_cost_table, ParamsId, SchemeParams};

/// Primitive operation names used as ledger and cost-table keys.
pub mod op {
    pub const ENCRYPT: &str = "encrypt";
    pub const ADD: &str = "add";
    pub const MULT_CT: &str = "mult_ct";
    pub const MULT_PT: &str = "mult_pt";
    pub const ROTATE: &str = "rotate";
    pub const BOOTSTRAP: &str = "bootstrap";
    pub const GATE_SWITCH: &str = "gate_switch";
    pub const GATE_COMPARE: &str = "gate_compare";
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeError {
    #[error("{len} values exceed the slot capacity of {capacity}")]
    CapacityExceeded { len: usize, capacity: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("operands were created under different scheme parameters")]
    ParamsMismatch,
    #[error("depth exhausted: {op} needs level {required} but the ciphertext is at level {level}")]
    DepthExhausted {
        op: &'static str,
        level: u32,
        required: u32,
    },
    #[error("invalid level {level}, maximum is {max}")]
    InvalidLevel { level: u32, max: u32 },
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),
}
