use serde::Serialize;

use super::{ChebError, ChebyshevSeries, Domain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub degree: usize,
    pub max_error: f64,
    pub depth_cost: u32,
}

/// Interpolates `f` at each degree and reports the max error over `grid`
/// evenly spaced points of `domain`, endpoints included.
pub fn degree_sweep(
    f: impl Fn(f64) -> f64,
    degrees: &[usize],
    domain: Domain,
    grid: usize,
) -> Result<Vec<SweepRow>, ChebError> {
    if degrees.is_empty() {
        return Err(ChebError::InvalidArgument("degree list is empty"));
    }
    if grid < 2 {
        return Err(ChebError::InvalidArgument("grid needs at least 2 points"));
    }
    let xs: Vec<f64> = (0..grid)
        .map(|i| domain.lo() + (domain.hi() - domain.lo()) * i as f64 / (grid - 1) as f64)
        .collect();
    let fx: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    degrees
        .iter()
        .map(|&degree| {
            let s = ChebyshevSeries::interpolate(&f, degree, domain)?;
            let max_error = xs
                .iter()
                .zip(&fx)
                .map(|(x, y)| (s.eval_unchecked(*x) - y).abs())
                .fold(0.0, f64::max);
            Ok(SweepRow {
                degree,
                max_error,
                depth_cost: s.depth_cost(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_arguments() {
        let relu = |x: f64| x.max(0.0);
        assert!(degree_sweep(relu, &[], Domain::unit(), 100).is_err());
        assert!(degree_sweep(relu, &[5], Domain::unit(), 1).is_err());
    }

    #[test]
    fn exact_for_polynomials() {
        let rows = degree_sweep(|x| x * x * x, &[3, 5], Domain::unit(), 101).unwrap();
        assert!(rows.iter().all(|r| r.max_error < 1e-12));
    }
}
