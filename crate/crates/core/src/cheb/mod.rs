//! Chebyshev polynomial machinery: the first-kind basis, interpolation at
//! Chebyshev roots, plain evaluation, and a logarithmic-depth encrypted
//! evaluation schedule.

mod schedule;
mod sweep;

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::he_core::{Engine, HeError, SimdCiphertext};

pub use schedule::{depth_cost, schedule_counts, ScheduleCounts};
pub use sweep::{degree_sweep, SweepRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChebError {
    #[error("{x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("invalid domain [{lo}, {hi}]: need lo < hi, both finite")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ChebError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ChebError::InvalidDomain { lo, hi });
        }
        Ok(Domain { lo, hi })
    }

    /// `[-1, 1]`.
    pub fn unit() -> Self {
        Domain { lo: -1.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// Coefficients (scale, shift) of the affine map onto `[-1, 1]`.
    pub fn to_unit(&self) -> (f64, f64) {
        let scale = 2.0 / (self.hi - self.lo);
        (scale, -(self.lo + self.hi) / (self.hi - self.lo))
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        0.5 * (self.hi - self.lo) * t + 0.5 * (self.lo + self.hi)
    }
}

/// T_n(x) via the three-term recurrence.
pub fn cheb_basis(n: usize, x: f64) -> Result<f64, ChebError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(ChebError::OutOfDomain {
            x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok(basis_unchecked(n, x))
}

fn basis_unchecked(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 2..=n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// The zeros of T_n, in strictly decreasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    nodes: Vec<f64>,
}

impl NodeSet {
    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Interpolation nodes cos((k + 1/2)π/n), k = 0..n-1.
pub fn cheb_nodes(n: usize) -> Result<NodeSet, ChebError> {
    if n == 0 {
        return Err(ChebError::InvalidArgument("node count must be at least 1"));
    }
    let nodes = (0..n)
        .map(|k| ((k as f64 + 0.5) * PI / n as f64).cos())
        .collect();
    Ok(NodeSet { nodes })
}

/// Σ c_j T_j over a domain `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChebyshevSeries {
    coefficients: Vec<f64>,
    domain: Domain,
}

impl ChebyshevSeries {
    pub fn new(coefficients: Vec<f64>, domain: Domain) -> Result<Self, ChebError> {
        if coefficients.is_empty() {
            return Err(ChebError::InvalidArgument(
                "a series needs at least one coefficient",
            ));
        }
        Ok(ChebyshevSeries {
            coefficients,
            domain,
        })
    }

    /// Interpolates `f` at the `degree + 1` first-kind roots mapped onto `domain`:
    /// c_j = (2 - [j = 0]) / (D + 1) · Σ_k f(x_k) T_j(x_k).
    pub fn interpolate(
        f: impl Fn(f64) -> f64,
        degree: usize,
        domain: Domain,
    ) -> Result<Self, ChebError> {
        let n = degree + 1;
        let nodes = cheb_nodes(n)?;
        let values: Vec<f64> = nodes
            .nodes
            .iter()
            .map(|t| f(domain.from_unit(*t)))
            .collect();
        let coefficients = (0..n)
            .map(|j| {
                let sum: f64 = nodes
                    .nodes
                    .iter()
                    .zip(&values)
                    .map(|(t, v)| v * basis_unchecked(j, *t))
                    .sum();
                let weight = if j == 0 { 1.0 } else { 2.0 };
                weight * sum / n as f64
            })
            .collect();
        Ok(ChebyshevSeries {
            coefficients,
            domain,
        })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Clenshaw evaluation; `x` must lie in the domain.
    pub fn eval(&self, x: f64) -> Result<f64, ChebError> {
        if !self.domain.contains(x) {
            return Err(ChebError::OutOfDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Clenshaw evaluation without the domain check. Outside the domain this
    /// is polynomial extrapolation, which is what an encrypted evaluation of
    /// an out-of-range slot computes.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let (scale, shift) = self.domain.to_unit();
        let t = scale * x + shift;
        let c = &self.coefficients;
        let (mut b1, mut b2) = (0.0, 0.0);
        for cj in c.iter().skip(1).rev() {
            let b0 = cj + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + t * b1 - b2
    }

    /// Levels consumed by [`cheb_eval_encrypted`] for this series.
    pub fn depth_cost(&self) -> u32 {
        depth_cost(self.degree())
    }
}

/// See [`ChebyshevSeries::interpolate`].
pub fn cheb_interpolate(
    f: impl Fn(f64) -> f64,
    degree: usize,
    domain: Domain,
) -> Result<ChebyshevSeries, ChebError> {
    ChebyshevSeries::interpolate(f, degree, domain)
}

pub fn cheb_eval_plain(series: &ChebyshevSeries, x: f64) -> Result<f64, ChebError> {
    series.eval(x)
}

/// Slot-wise evaluation of `series` on an encrypted vector.
///
/// Consumes exactly [`depth_cost`]`(degree)` levels. Slots outside the domain
/// are not clamped; they get the extrapolated polynomial value.
pub fn cheb_eval_encrypted(
    engine: &Engine,
    series: &ChebyshevSeries,
    ct: &SimdCiphertext,
) -> Result<SimdCiphertext, HeError> {
    let required = series.depth_cost();
    if ct.level() < required {
        return Err(HeError::DepthExhausted {
            op: "cheb_eval_encrypted",
            level: ct.level(),
            required,
        });
    }
    schedule::evaluate(&mut schedule::EngineArith(engine), ct, series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::he_core::SchemeParams;

    #[test]
    fn basis_examples() {
        assert_eq!(cheb_basis(0, 0.3).unwrap(), 1.0);
        assert_eq!(cheb_basis(0, -1.0).unwrap(), 1.0);
        assert!((cheb_basis(2, 0.5).unwrap() - (-0.5)).abs() < 1e-15);
        let x = 0.3f64.cos();
        assert!((cheb_basis(7, x).unwrap() - 2.1f64.cos()).abs() < 1e-12);
        assert!(matches!(
            cheb_basis(3, 1.5),
            Err(ChebError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn node_examples() {
        assert!(cheb_nodes(0).is_err());
        let one = cheb_nodes(1).unwrap();
        assert!(one.nodes()[0].abs() < 1e-16);
        let two = cheb_nodes(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((two.nodes()[0] - r).abs() < 1e-15);
        assert!((two.nodes()[1] + r).abs() < 1e-15);
        for n in [3usize, 10, 51] {
            let set = cheb_nodes(n).unwrap();
            assert_eq!(set.degree(), n);
            assert!(set.nodes().windows(2).all(|w| w[0] > w[1]));
            for x in set.nodes() {
                assert!(cheb_basis(n, *x).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interpolation_examples() {
        let sq = cheb_interpolate(|x| x * x, 2, Domain::unit()).unwrap();
        let c = sq.coefficients();
        assert!((c[0] - 0.5).abs() < 1e-12 && c[1].abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
        for d in [0usize, 3, 9] {
            let k = cheb_interpolate(|_| 1.0, d, Domain::unit()).unwrap();
            assert!((k.coefficients()[0] - 1.0).abs() < 1e-12);
            assert!(k.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
        }
        assert!(matches!(
            Domain::new(1.0, 1.0),
            Err(ChebError::InvalidDomain { .. })
        ));
        assert!(Domain::new(2.0, -1.0).is_err());
    }

    #[test]
    fn plain_eval_examples() {
        let sq = cheb_interpolate(|x| x * x, 2, Domain::unit()).unwrap();
        assert!(matches!(
            cheb_eval_plain(&sq, 3.0),
            Err(ChebError::OutOfDomain { .. })
        ));
        assert!((cheb_eval_plain(&sq, 0.5).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn clenshaw_matches_naive_sum() {
        let coeffs = vec![0.3, -1.2, 0.7, 0.05, -0.4, 0.9, -0.15];
        let s = ChebyshevSeries::new(coeffs.clone(), Domain::unit()).unwrap();
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            let naive: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * cheb_basis(j, x).unwrap())
                .sum();
            assert!((s.eval(x).unwrap() - naive).abs() < 1e-10);
        }
    }

    #[test]
    fn general_domain_interpolation() {
        let d = Domain::new(2.0, 6.0).unwrap();
        let s = cheb_interpolate(|x| x * x * x - x, 3, d).unwrap();
        for x in [2.0, 3.3, 4.0, 6.0] {
            assert!((s.eval(x).unwrap() - (x * x * x - x)).abs() < 1e-9);
        }
    }

    #[test]
    fn encrypted_square_series() {
        let e = Engine::new(SchemeParams::lenet()).unwrap();
        let sq = cheb_interpolate(|x| x * x, 2, Domain::unit()).unwrap();
        let ct = e.encode_encrypt(&[0.5, -0.5]).unwrap();
        let out = cheb_eval_encrypted(&e, &sq, &ct).unwrap();
        for v in e.decrypt_decode(&out) {
            assert!((v - 0.25).abs() < 1e-9);
        }
        assert_eq!(out.level(), 10 - sq.depth_cost());
    }

    #[test]
    fn encrypted_relu_d50_depth_and_boundary() {
        let e = Engine::new(SchemeParams::lenet()).unwrap();
        let relu = cheb_interpolate(|x| x.max(0.0), 50, Domain::unit()).unwrap();
        let ct = e.encode_encrypt(&[-0.5, 0.25, 0.9]).unwrap();
        let out = cheb_eval_encrypted(&e, &relu, &ct).unwrap();
        assert_eq!(relu.depth_cost(), 8);
        assert_eq!(out.level(), 2);
        let mut low = ct.clone();
        for _ in 0..7 {
            low = e.mult_scalar(&low, 1.0).unwrap();
        }
        assert_eq!(low.level(), 3);
        assert!(matches!(
            cheb_eval_encrypted(&e, &relu, &low),
            Err(HeError::DepthExhausted { .. })
        ));
    }
}
