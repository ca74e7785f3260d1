//! Baby-step giant-step evaluation in the Chebyshev basis.
//!
//! The schedule is fixed by the degree alone: every baby-step term is
//! multiplied in each base case, even by a zero coefficient. That makes the
//! consumed depth a function of the degree, so planners can rely on it.

use serde::Serialize;

use super::ChebyshevSeries;
use crate::he_core::{Engine, HeError, SimdCiphertext};

/// The arithmetic the schedule needs. `mul` and `mul_scalar` each consume one level.
pub(crate) trait PolyArith {
    type V: Clone;
    type E;
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, Self::E>;
    fn mul_scalar(&mut self, a: &Self::V, c: f64) -> Result<Self::V, Self::E>;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, Self::E>;
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, Self::E>;
    fn add_scalar(&mut self, a: &Self::V, c: f64) -> Result<Self::V, Self::E>;
}

pub(crate) struct EngineArith<'a>(pub &'a Engine);

impl PolyArith for EngineArith<'_> {
    type V = SimdCiphertext;
    type E = HeError;
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, HeError> {
        self.0.mult(a, b)
    }
    fn mul_scalar(&mut self, a: &Self::V, c: f64) -> Result<Self::V, HeError> {
        self.0.mult_scalar(a, c)
    }
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, HeError> {
        self.0.add(a, b)
    }
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, HeError> {
        self.0.sub(a, b)
    }
    fn add_scalar(&mut self, a: &Self::V, c: f64) -> Result<Self::V, HeError> {
        self.0.add_scalar(a, c)
    }
}

/// Static operation counts of one encrypted evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScheduleCounts {
    pub depth: u32,
    pub mult_ct: u64,
    pub mult_pt: u64,
    pub add: u64,
}

/// Tracks consumed depth per value and tallies ops.
#[derive(Default)]
struct Symbolic {
    counts: ScheduleCounts,
}

impl PolyArith for Symbolic {
    type V = u32;
    type E = std::convert::Infallible;
    fn mul(&mut self, a: &u32, b: &u32) -> Result<u32, Self::E> {
        self.counts.mult_ct += 1;
        Ok(*a.max(b) + 1)
    }
    fn mul_scalar(&mut self, a: &u32, _: f64) -> Result<u32, Self::E> {
        self.counts.mult_pt += 1;
        Ok(a + 1)
    }
    fn add(&mut self, a: &u32, b: &u32) -> Result<u32, Self::E> {
        self.counts.add += 1;
        Ok(*a.max(b))
    }
    fn sub(&mut self, a: &u32, b: &u32) -> Result<u32, Self::E> {
        self.add(a, b)
    }
    fn add_scalar(&mut self, a: &u32, _: f64) -> Result<u32, Self::E> {
        self.counts.add += 1;
        Ok(*a)
    }
}

struct Shape {
    m: usize,
    giants: u32,
}

fn shape(degree: usize) -> Shape {
    let big_l = usize::BITS - degree.leading_zeros(); // ceil(log2(degree + 1))
    let l = big_l.div_ceil(2).max(1);
    Shape {
        m: 1 << l,
        giants: big_l.saturating_sub(l),
    }
}

/// Levels consumed by the encrypted evaluation of a degree-`degree` series.
pub fn depth_cost(degree: usize) -> u32 {
    schedule_counts(degree).depth
}

/// Depth and op counts of the encrypted evaluation, without running it.
pub fn schedule_counts(degree: usize) -> ScheduleCounts {
    let mut sym = Symbolic::default();
    let series = ChebyshevSeries {
        coefficients: vec![0.0; degree + 1],
        domain: super::Domain::unit(),
    };
    let Ok(depth) = evaluate(&mut sym, &0u32, &series);
    sym.counts.depth = depth;
    sym.counts
}

/// 2·a·b − c, one level.
fn double_product_minus<A: PolyArith>(
    ar: &mut A,
    a: &A::V,
    b: &A::V,
    c: Option<&A::V>,
) -> Result<A::V, A::E> {
    let p = ar.mul(a, b)?;
    let p2 = ar.add(&p, &p)?;
    match c {
        Some(c) => ar.sub(&p2, c),
        None => ar.add_scalar(&p2, -1.0),
    }
}

pub(crate) fn evaluate<A: PolyArith>(
    ar: &mut A,
    x: &A::V,
    series: &ChebyshevSeries,
) -> Result<A::V, A::E> {
    let (scale, shift) = series.domain.to_unit();
    let t = ar.mul_scalar(x, scale)?;
    let t = ar.add_scalar(&t, shift)?;

    let Shape { m, giants } = shape(series.degree());

    // baby[i] = T_i for 1 <= i < m; index 0 is unused (T_0 = 1).
    let mut baby: Vec<A::V> = vec![t.clone(); m];
    for i in 2..m {
        let a = i.next_power_of_two() / 2;
        let b = i - a;
        baby[i] = if a == b {
            double_product_minus(ar, &baby[a], &baby[a], None)?
        } else {
            let diff = baby[a - b].clone();
            double_product_minus(ar, &baby[a], &baby[b], Some(&diff))?
        };
    }

    // giant[k] = T_{m·2^k}
    let mut giant: Vec<A::V> = Vec::with_capacity(giants as usize);
    if giants > 0 {
        let half = m / 2;
        let first = double_product_minus(ar, &baby[half], &baby[half], None)?;
        giant.push(first);
        for k in 1..giants as usize {
            let prev = giant[k - 1].clone();
            giant.push(double_product_minus(ar, &prev, &prev, None)?);
        }
    }

    let mut coeffs = series.coefficients.clone();
    coeffs.resize(m << giants, 0.0);
    recurse(ar, &coeffs, &baby, &giant, giants as usize)
}

fn recurse<A: PolyArith>(
    ar: &mut A,
    coeffs: &[f64],
    baby: &[A::V],
    giant: &[A::V],
    k: usize,
) -> Result<A::V, A::E> {
    if k == 0 {
        let mut acc = ar.mul_scalar(&baby[1], coeffs[1])?;
        for (i, term) in baby.iter().enumerate().skip(2) {
            let scaled = ar.mul_scalar(term, coeffs[i])?;
            acc = ar.add(&acc, &scaled)?;
        }
        return ar.add_scalar(&acc, coeffs[0]);
    }
    // p = q·T_n + r with deg q, deg r < n.
    let n = coeffs.len() / 2;
    let mut q = vec![0.0; n];
    let mut r = coeffs[..n].to_vec();
    q[0] = coeffs[n];
    for j in n + 1..2 * n {
        q[j - n] += 2.0 * coeffs[j];
        r[2 * n - j] -= coeffs[j];
    }
    let qv = recurse(ar, &q, baby, giant, k - 1)?;
    let rv = recurse(ar, &r, baby, giant, k - 1)?;
    let prod = ar.mul(&qv, &giant[k - 1])?;
    ar.add(&prod, &rv)
}
