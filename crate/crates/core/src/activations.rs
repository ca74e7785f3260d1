//! Encrypted activation functions: square, Chebyshev-approximated ReLU and
//! scheme-switching ReLU, plus their plaintext counterparts.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::cheb::{cheb_eval_encrypted, ChebyshevSeries, Domain};
use crate::he_core::{Engine, HeError, SchemeParams, SimdCiphertext};

pub const DEFAULT_DEGREE: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActivationError {
    #[error("beta must be finite and at least 1, got {0}")]
    InvalidBeta(f64),
    #[error("unknown activation {0:?}")]
    UnknownKind(String),
    #[error("activation {0} takes no beta/degree")]
    UnexpectedConfig(&'static str),
}

/// Scaling bound and degree for the approximated ReLU. The series for
/// g(z) = β·max(0, z) on [-1, 1] is built on construction and shared.
#[derive(Clone)]
pub struct ApproxReluConfig {
    beta: f64,
    degree: usize,
    series: Arc<ChebyshevSeries>,
}

impl ApproxReluConfig {
    pub fn new(beta: f64, degree: usize) -> Result<Self, ActivationError> {
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(ActivationError::InvalidBeta(beta));
        }
        let series = ChebyshevSeries::interpolate(|z| beta * z.max(0.0), degree, Domain::unit())
            .expect("unit domain is valid");
        Ok(ApproxReluConfig {
            beta,
            degree,
            series: Arc::new(series),
        })
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self, ActivationError> {
        Self::new(beta, self.degree)
    }

    pub fn with_degree(&self, degree: usize) -> Result<Self, ActivationError> {
        Self::new(self.beta, degree)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn series(&self) -> &ChebyshevSeries {
        &self.series
    }

    pub fn scales_input(&self) -> bool {
        self.beta > 1.0
    }

    pub fn depth_cost(&self) -> u32 {
        u32::from(self.scales_input()) + self.series.depth_cost()
    }

    /// What the encrypted evaluation computes, without noise.
    pub fn eval_plain(&self, x: f64) -> f64 {
        let z = if self.scales_input() {
            x * (1.0 / self.beta)
        } else {
            x
        };
        self.series.eval_unchecked(z)
    }
}

impl fmt::Debug for ApproxReluConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApproxReluConfig")
            .field("beta", &self.beta)
            .field("degree", &self.degree)
            .finish()
    }
}

impl PartialEq for ApproxReluConfig {
    fn eq(&self, other: &Self) -> bool {
        self.beta == other.beta && self.degree == other.degree
    }
}

impl Serialize for ApproxReluConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ApproxReluConfig", 2)?;
        st.serialize_field("beta", &self.beta)?;
        st.serialize_field("degree", &self.degree)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ActivationKind {
    Identity,
    Square,
    ReluApprox(ApproxReluConfig),
    ReluSwitch,
}

impl ActivationKind {
    /// Builds a kind from its JSON tag; `beta`/`degree` are only valid for
    /// `relu_approx` (defaults 1 and 50).
    pub fn from_parts(
        tag: &str,
        beta: Option<f64>,
        degree: Option<usize>,
    ) -> Result<Self, ActivationError> {
        let kind = match tag {
            "identity" | "none" => ActivationKind::Identity,
            "square" => ActivationKind::Square,
            "relu_switch" => ActivationKind::ReluSwitch,
            "relu_approx" => {
                return Ok(ActivationKind::ReluApprox(ApproxReluConfig::new(
                    beta.unwrap_or(1.0),
                    degree.unwrap_or(DEFAULT_DEGREE),
                )?))
            }
            other => return Err(ActivationError::UnknownKind(other.to_string())),
        };
        if beta.is_some() || degree.is_some() {
            return Err(ActivationError::UnexpectedConfig(kind.tag()));
        }
        Ok(kind)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Square => "square",
            ActivationKind::ReluApprox(_) => "relu_approx",
            ActivationKind::ReluSwitch => "relu_switch",
        }
    }

    pub fn config(&self) -> Option<&ApproxReluConfig> {
        match self {
            ActivationKind::ReluApprox(cfg) => Some(cfg),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ActivationKind::Identity)
    }

    pub fn depth_cost(&self) -> u32 {
        match self {
            ActivationKind::Identity => 0,
            ActivationKind::Square | ActivationKind::ReluSwitch => 1,
            ActivationKind::ReluApprox(cfg) => cfg.depth_cost(),
        }
    }
}

fn require(op: &'static str, ct: &SimdCiphertext, required: u32) -> Result<(), HeError> {
    if ct.level() < required {
        return Err(HeError::DepthExhausted {
            op,
            level: ct.level(),
            required,
        });
    }
    Ok(())
}

/// x², one ciphertext multiplication.
pub fn act_square(engine: &Engine, ct: &SimdCiphertext) -> Result<SimdCiphertext, HeError> {
    engine.mult(ct, ct)
}

/// β·g(x/β) with g the degree-D series of ReLU's β-scaled form. The 1/β
/// scaling is skipped when β = 1.
pub fn act_relu_approx(
    engine: &Engine,
    ct: &SimdCiphertext,
    cfg: &ApproxReluConfig,
) -> Result<SimdCiphertext, HeError> {
    require("act_relu_approx", ct, cfg.depth_cost())?;
    if cfg.scales_input() {
        let scaled = engine.mult_scalar(ct, 1.0 / cfg.beta)?;
        cheb_eval_encrypted(engine, &cfg.series, &scaled)
    } else {
        cheb_eval_encrypted(engine, &cfg.series, ct)
    }
}

/// ReLU through the gate domain: the sign of each of the first `n` slots is
/// decided by an exact comparison against zero, brought back as a 0/1 mask,
/// and multiplied into the input. Slots at index ≥ n come out as zero.
pub fn act_relu_switch(
    engine: &Engine,
    ct: &SimdCiphertext,
    n: usize,
) -> Result<SimdCiphertext, HeError> {
    if n == 0 {
        return Err(HeError::Degenerate(
            "act_relu_switch needs at least one active slot",
        ));
    }
    require("act_relu_switch", ct, 1)?;
    let zeros = engine.encode_encrypt(&vec![0.0; n])?;
    let tc = engine.switch_to_gate(ct, n)?;
    let tz = engine.switch_to_gate(&zeros, n)?;
    let negative = engine.gate_compare_less(&tc, &tz, n)?;
    let mut comp = engine.switch_to_simd(&negative, engine.max_level())?;
    if n < ct.len() {
        comp = engine.zero_extend(&comp, ct.len())?;
    }
    let mut mask = vec![0.0; ct.len()];
    mask[..n].fill(1.0);
    let sign = engine.plain_sub(&mask, &comp)?;
    engine.mult(&sign, ct)
}

/// Dispatches on `kind`; `n` is the active slot count used by the switch.
pub fn act_apply(
    engine: &Engine,
    kind: &ActivationKind,
    ct: &SimdCiphertext,
    n: usize,
) -> Result<SimdCiphertext, HeError> {
    match kind {
        ActivationKind::Identity => Ok(ct.clone()),
        ActivationKind::Square => act_square(engine, ct),
        ActivationKind::ReluApprox(cfg) => act_relu_approx(engine, ct, cfg),
        ActivationKind::ReluSwitch => act_relu_switch(engine, ct, n),
    }
}

/// Noise-free scalar version of `kind`.
///
/// With `exact_relu`, both ReLU kinds are the true max(0, x). Otherwise they
/// reproduce the encrypted arithmetic: the series for `relu_approx` and the
/// quantized sign decision for `relu_switch`.
pub fn act_plain(kind: &ActivationKind, x: f64, exact_relu: bool, params: &SchemeParams) -> f64 {
    match kind {
        ActivationKind::Identity => x,
        ActivationKind::Square => x * x,
        ActivationKind::ReluApprox(_) | ActivationKind::ReluSwitch if exact_relu => x.max(0.0),
        ActivationKind::ReluApprox(cfg) => cfg.eval_plain(x),
        ActivationKind::ReluSwitch => {
            if params.quantize(x) < 0 {
                0.0
            } else {
                x
            }
        }
    }
}
