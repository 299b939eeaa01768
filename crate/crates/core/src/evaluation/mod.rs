//! Curve metrics and the comparison protocols built on them.
//!
//! Curves are compared on a [`TenorGrid`]; the continuous maximum in the
//! maximum-absolute-difference metric is taken over the same grid points.

mod experiments;
mod report;

pub use experiments::*;
pub use report::*;

use crate::error::{Error, Result};
use crate::grid::{Bucket, TenorGrid};
use crate::market::MarketSnapshot;
use crate::pricing::{yield_to_maturity, YieldCurve};

/// Day-over-day RMSE below this counts as a hit (10 bp).
pub const DEFAULT_HIT_THRESHOLD: f64 = 0.0010;

/// Yields of `curve` at each tenor.
pub fn sample_curve<C: YieldCurve + ?Sized>(curve: &C, tenors: &[f64]) -> Result<Vec<f64>> {
    tenors.iter().map(|&t| curve.yield_at(t)).collect()
}

/// Root mean squared gap between fitted yields at each bond's maturity and
/// the bond's YTM.
pub fn rmse_ytm<C: YieldCurve + ?Sized>(curve: &C, snapshot: &MarketSnapshot) -> Result<f64> {
    if snapshot.bonds.is_empty() {
        return Err(Error::Precondition("rmse_ytm needs at least one bond".into()));
    }
    let mut sum = 0.0;
    for bond in &snapshot.bonds {
        let ytm = yield_to_maturity(bond)?;
        let d = curve.yield_at(bond.maturity)? - ytm;
        sum += d * d;
    }
    Ok((sum / snapshot.bonds.len() as f64).sqrt())
}

/// Quadratic mean of `a - b`. `NaN` for empty input.
pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// Largest `|a - b|`. `NaN` for empty input.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .reduce(f64::max)
        .unwrap_or(f64::NAN)
}

fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

/// RMSE of two sampled curves over the grid points in `bucket`, or `None`
/// when the bucket holds no grid points.
pub fn bucket_rmse(a: &[f64], b: &[f64], grid: &TenorGrid, bucket: Bucket) -> Option<f64> {
    let idx = grid.bucket_indices(bucket);
    (!idx.is_empty()).then(|| rmse(&pick(a, &idx), &pick(b, &idx)))
}

pub fn rmse_curve<A, B>(a: &A, b: &B, grid: &TenorGrid) -> Result<f64>
where
    A: YieldCurve + ?Sized,
    B: YieldCurve + ?Sized,
{
    Ok(rmse(&sample_curve(a, grid.tenors())?, &sample_curve(b, grid.tenors())?))
}

pub fn mad_curve<A, B>(a: &A, b: &B, grid: &TenorGrid) -> Result<f64>
where
    A: YieldCurve + ?Sized,
    B: YieldCurve + ?Sized,
{
    Ok(max_abs_diff(&sample_curve(a, grid.tenors())?, &sample_curve(b, grid.tenors())?))
}

/// Fraction of `values` strictly below `threshold`; 0 for an empty slice.
pub fn hit_rate(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v < threshold).count() as f64 / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{BenchmarkCurve, Bond};
    use crate::pricing::{FlatCurve, SpreadCurve};

    #[test]
    fn constant_offset() {
        let grid = TenorGrid::standard();
        let a = FlatCurve::new(0.03);
        let b = SpreadCurve::new(FlatCurve::new(0.03), 0.0025);
        let r = rmse_curve(&a, &b, &grid).unwrap();
        let m = mad_curve(&a, &b, &grid).unwrap();
        assert!((r - 0.0025).abs() < 1e-15);
        assert!((m - 0.0025).abs() < 1e-15);
        assert_eq!(rmse_curve(&a, &a, &grid).unwrap(), 0.0);
        assert_eq!(mad_curve(&a, &a, &grid).unwrap(), 0.0);
    }

    #[test]
    fn single_bond_ytm_gap() {
        let bond = Bond::zero_coupon("Z", 100.0, 4.0, 100.0 * (-0.12f64).exp()).unwrap();
        let bench = BenchmarkCurve::new(vec![1.0, 2.0], vec![0.03, 0.03]).unwrap();
        let snap = MarketSnapshot::new("d", vec![bond], bench).unwrap();
        assert!((rmse_ytm(&FlatCurve::new(0.031), &snap).unwrap() - 0.0010).abs() < 1e-12);
        assert!(rmse_ytm(&FlatCurve::new(0.03), &snap).unwrap() < 1e-12);
    }

    #[test]
    fn hit_rate_edges() {
        assert_eq!(hit_rate(&[], 0.001), 0.0);
        assert_eq!(hit_rate(&[0.0, 0.0], 0.0), 0.0);
        assert_eq!(hit_rate(&[0.0005, 0.002, 0.0009, 0.001], 0.001), 0.5);
    }

    #[test]
    fn buckets_cover_grid() {
        let grid = TenorGrid::standard();
        let a: Vec<f64> = grid.tenors().iter().map(|t| 0.01 * t.sqrt()).collect();
        let b = vec![0.02; grid.len()];
        let full = bucket_rmse(&a, &b, &grid, Bucket::Full).unwrap();
        let parts: f64 = Bucket::PARTS
            .iter()
            .map(|&k| bucket_rmse(&a, &b, &grid, k).unwrap().powi(2) * grid.bucket_indices(k).len() as f64)
            .sum();
        assert!((full - (parts / grid.len() as f64).sqrt()).abs() < 1e-15);
    }
}
