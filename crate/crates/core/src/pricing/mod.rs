//! Discounting, present value, yield-to-maturity, duration and the
//! sequential bootstrap.
//!
//! All rates are continuously compounded decimals; all times are in years.

mod bootstrap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{BenchmarkCurve, Bond, MarketSnapshot};

pub use bootstrap::{bootstrap, BootstrapCurve, BootstrapDiagnostic};

/// Lower end of the flat-rate bracket used by the YTM solver.
pub const YTM_LOWER: f64 = -0.10;
/// Upper end of the flat-rate bracket used by the YTM solver.
pub const YTM_UPPER: f64 = 1.00;

/// A spot-yield curve `y(t)`.
pub trait YieldCurve: Send + Sync {
    fn yield_at(&self, t: f64) -> Result<f64>;

    fn discount(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("discount factor needs t > 0, got {t}")));
        }
        let y = self.yield_at(t)?;
        if !y.is_finite() {
            return Err(Error::Domain(format!("non-finite yield at t = {t}")));
        }
        Ok((-t * y).exp())
    }
}

impl<C: YieldCurve + ?Sized> YieldCurve for &C {
    fn yield_at(&self, t: f64) -> Result<f64> {
        (**self).yield_at(t)
    }

    fn discount(&self, t: f64) -> Result<f64> {
        (**self).discount(t)
    }
}

impl<C: YieldCurve + ?Sized> YieldCurve for Box<C> {
    fn yield_at(&self, t: f64) -> Result<f64> {
        (**self).yield_at(t)
    }

    fn discount(&self, t: f64) -> Result<f64> {
        (**self).discount(t)
    }
}

/// Constant yield.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatCurve {
    pub rate: f64,
}

impl FlatCurve {
    pub fn new(rate: f64) -> Self {
        Self { rate }
    }
}

impl YieldCurve for FlatCurve {
    fn yield_at(&self, _t: f64) -> Result<f64> {
        Ok(self.rate)
    }
}

/// `base(t) + spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadCurve<C> {
    pub base: C,
    pub spread: f64,
}

impl<C> SpreadCurve<C> {
    pub fn new(base: C, spread: f64) -> Self {
        Self { base, spread }
    }
}

impl<C: YieldCurve> YieldCurve for SpreadCurve<C> {
    fn yield_at(&self, t: f64) -> Result<f64> {
        Ok(self.base.yield_at(t)? + self.spread)
    }
}

impl YieldCurve for BenchmarkCurve {
    fn yield_at(&self, t: f64) -> Result<f64> {
        Ok(self.rate_at(t))
    }
}

/// `e^{-t y(t)}`.
pub fn discount_factor<C: YieldCurve + ?Sized>(curve: &C, t: f64) -> Result<f64> {
    curve.discount(t)
}

/// Sum of the bond's payments discounted on `curve`; the final coupon and
/// face value are discounted together at maturity.
pub fn present_value<C: YieldCurve + ?Sized>(curve: &C, bond: &Bond) -> Result<f64> {
    bond.payments()
        .into_iter()
        .map(|(t, amount)| Ok(amount * curve.discount(t)?))
        .sum()
}

/// Price of the bond on a flat curve at `rate`, with its derivative in `rate`.
fn flat_price_and_slope(bond: &Bond, rate: f64) -> (f64, f64) {
    bond.payments().into_iter().fold((0.0, 0.0), |(pv, dpv), (t, a)| {
        let d = a * (-rate * t).exp();
        (pv + d, dpv - t * d)
    })
}

/// Root of a strictly decreasing function on `[lo, hi]` with
/// `f(lo) >= 0 >= f(hi)`. Newton steps are taken when they stay inside the
/// current bracket, bisection otherwise.
pub(crate) fn solve_decreasing(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx.abs() <= tol {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return x;
        }
        let newton = x - fx / dfx;
        x = if dfx < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Flat continuously compounded rate that reprices the bond.
///
/// Fails with [`Error::NoSolution`] when the market price lies outside the
/// prices implied by flat rates in `[YTM_LOWER, YTM_UPPER]`.
pub fn yield_to_maturity(bond: &Bond) -> Result<f64> {
    let price = bond.market_price;
    let (pv_low_rate, _) = flat_price_and_slope(bond, YTM_LOWER);
    let (pv_high_rate, _) = flat_price_and_slope(bond, YTM_UPPER);
    if !(price <= pv_low_rate && price >= pv_high_rate) {
        return Err(Error::NoSolution {
            bond_id: bond.id.clone(),
            message: format!(
                "price {price} outside [{pv_high_rate}, {pv_low_rate}] spanned by flat rates [{YTM_LOWER}, {YTM_UPPER}]"
            ),
        });
    }
    let tol = 1e-13 * price;
    Ok(solve_decreasing(
        |r| {
            let (pv, dpv) = flat_price_and_slope(bond, r);
            (pv - price, dpv)
        },
        YTM_LOWER,
        YTM_UPPER,
        tol,
    ))
}

/// PV-weighted mean payment time at the bond's own YTM.
pub fn macaulay_duration(bond: &Bond) -> Result<f64> {
    let ytm = yield_to_maturity(bond)?;
    let (pv, dpv) = flat_price_and_slope(bond, ytm);
    Ok(-dpv / pv)
}

/// Central-difference instantaneous forward `y(t) + t y'(t)`.
pub fn forward_rate<C: YieldCurve + ?Sized>(curve: &C, t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(t - h > 0.0) {
        return Err(Error::Domain(format!("forward rate needs t > h > 0, got t = {t}, h = {h}")));
    }
    let y = curve.yield_at(t)?;
    let slope = (curve.yield_at(t + h)? - curve.yield_at(t - h)?) / (2.0 * h);
    Ok(y + t * slope)
}

/// Weights `1 / (M (D_j p_j)^2)` that turn squared price errors into
/// approximate squared yield errors.
pub fn duration_weights(snapshot: &MarketSnapshot) -> Result<Vec<f64>> {
    let m = snapshot.bonds.len() as f64;
    snapshot
        .bonds
        .iter()
        .map(|bond| {
            let dp = macaulay_duration(bond)? * bond.market_price;
            Ok(1.0 / (m * dp * dp))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Cashflow;

    struct LinearCurve {
        a: f64,
        b: f64,
    }

    impl YieldCurve for LinearCurve {
        fn yield_at(&self, t: f64) -> Result<f64> {
            Ok(self.a + self.b * t)
        }
    }

    fn two_year_bond(price: f64) -> Bond {
        Bond::new(
            "C",
            vec![Cashflow { time: 1.0, amount: 3.0 }, Cashflow { time: 2.0, amount: 3.0 }],
            100.0,
            2.0,
            price,
        )
        .unwrap()
    }

    #[test]
    fn discount_factor_examples() {
        assert_eq!(discount_factor(&FlatCurve::new(0.0), 5.0).unwrap(), 1.0);
        let d = discount_factor(&FlatCurve::new(0.03), 2.0).unwrap();
        assert!((d - (-0.06f64).exp()).abs() < 1e-15);
        assert!((d - 0.941765).abs() < 1e-6);
        assert!(matches!(discount_factor(&FlatCurve::new(0.03), -1.0), Err(Error::Domain(_))));
        assert!(discount_factor(&FlatCurve::new(0.03), 1e-9).unwrap().is_finite());
    }

    #[test]
    fn present_value_examples() {
        let z = Bond::zero_coupon("Z", 100.0, 1.0, 100.0).unwrap();
        assert_eq!(present_value(&FlatCurve::new(0.0), &z).unwrap(), 100.0);

        let pv = present_value(&FlatCurve::new(0.02), &two_year_bond(100.0)).unwrap();
        let expected = 3.0 * (-0.02f64).exp() + 103.0 * (-0.04f64).exp();
        assert!((pv - expected).abs() < 1e-12);
        assert!((pv - 101.9019083).abs() < 1e-7);
    }

    #[test]
    fn ytm_examples() {
        let z = Bond::zero_coupon("Z", 100.0, 2.0, 100.0).unwrap();
        assert!(yield_to_maturity(&z).unwrap().abs() < 1e-14);
        let z = Bond::zero_coupon("Z", 100.0, 2.0, 100.0 * (-0.05f64).exp()).unwrap();
        assert!((yield_to_maturity(&z).unwrap() - 0.025).abs() < 1e-13);

        let price = present_value(&FlatCurve::new(0.03), &two_year_bond(1.0)).unwrap();
        assert!((yield_to_maturity(&two_year_bond(price)).unwrap() - 0.03).abs() < 1e-9);
    }

    #[test]
    fn ytm_outside_bracket() {
        let err = yield_to_maturity(&two_year_bond(500.0)).unwrap_err();
        assert!(matches!(err, Error::NoSolution { ref bond_id, .. } if bond_id == "C"));
        assert!(yield_to_maturity(&two_year_bond(0.5)).is_err());
    }

    #[test]
    fn duration_examples() {
        let z = Bond::zero_coupon("Z", 100.0, 7.0, 80.0).unwrap();
        assert!((macaulay_duration(&z).unwrap() - 7.0).abs() < 1e-12);

        // 3/year coupons, F=100, T=2, priced at ytm = 0.02; brute-force sum
        let price = 3.0 * (-0.02f64).exp() + 103.0 * (-0.04f64).exp();
        let bond = two_year_bond(price);
        let num = 1.0 * 3.0 * (-0.02f64).exp() + 2.0 * 103.0 * (-0.04f64).exp();
        let expected = num / price;
        let got = macaulay_duration(&bond).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
        assert!(got < 2.0);
    }

    #[test]
    fn forward_rate_examples() {
        let f = forward_rate(&FlatCurve::new(0.025), 3.0, 1e-3).unwrap();
        assert!((f - 0.025).abs() < 1e-15);
        let lin = LinearCurve { a: 0.01, b: 0.002 };
        let f = forward_rate(&lin, 4.0, 1e-3).unwrap();
        assert!((f - (0.01 + 2.0 * 0.002 * 4.0)).abs() < 1e-12);
        assert!(forward_rate(&lin, 1e-4, 1e-3).is_err());
    }

    #[test]
    fn pv_decreases_under_parallel_shift() {
        let bond = two_year_bond(100.0);
        let mut last = f64::INFINITY;
        for shift in [-0.02, 0.0, 0.01, 0.05] {
            let pv = present_value(&SpreadCurve::new(LinearCurve { a: 0.01, b: 0.001 }, shift), &bond).unwrap();
            assert!(pv < last);
            last = pv;
        }
    }
}
