use serde::{Deserialize, Serialize};

use super::{solve_decreasing, YieldCurve, YTM_LOWER, YTM_UPPER};
use crate::error::{Error, Result};
use crate::market::{linear_flat, MarketSnapshot};

/// Knots closer than this (years) are treated as the same maturity.
const SAME_MATURITY_TOL: f64 = 1e-12;

/// A bond the bootstrap could not place on the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDiagnostic {
    pub bond_id: String,
    pub message: String,
}

/// Piecewise-linear yield curve through one knot per bootstrapped bond,
/// flat beyond the first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCurve {
    pub knot_times: Vec<f64>,
    pub knot_yields: Vec<f64>,
    #[serde(default)]
    pub diagnostics: Vec<BootstrapDiagnostic>,
}

impl YieldCurve for BootstrapCurve {
    fn yield_at(&self, t: f64) -> Result<f64> {
        if self.knot_times.is_empty() {
            return Err(Error::FitFailure("bootstrap curve has no knots".into()));
        }
        Ok(linear_flat(&self.knot_times, &self.knot_yields, t))
    }
}

/// Yield at `t` on the curve extended by a new last knot at `maturity`,
/// written as `base + weight * y_new`.
fn split_yield(times: &[f64], yields: &[f64], maturity: f64, t: f64) -> (f64, f64) {
    let Some(&last) = times.last() else {
        return (0.0, 1.0);
    };
    if t <= times[0] {
        (yields[0], 0.0)
    } else if t >= last {
        let w = (t - last) / (maturity - last);
        ((1.0 - w) * yields[yields.len() - 1], w)
    } else {
        (linear_flat(times, yields, t), 0.0)
    }
}

/// Sequential exact-fit curve: bonds are processed by increasing maturity
/// and each one contributes the knot at its maturity that reprices it.
///
/// Cashflows before the new knot are discounted on the final curve shape,
/// i.e. those between the previous knot and the new maturity use the
/// interpolation towards the unknown knot, so every accepted bond reprices
/// exactly on the returned curve. Bonds that share a maturity with an
/// earlier knot, or whose price cannot be matched with a knot yield in
/// `[YTM_LOWER, YTM_UPPER]`, are skipped and reported in `diagnostics`.
pub fn bootstrap(snapshot: &MarketSnapshot) -> Result<BootstrapCurve> {
    let mut times: Vec<f64> = Vec::new();
    let mut yields: Vec<f64> = Vec::new();
    let mut diagnostics = Vec::new();

    for idx in snapshot.maturity_order() {
        let bond = &snapshot.bonds[idx];
        let maturity = bond.maturity;
        if let Some(&last) = times.last() {
            if maturity - last <= SAME_MATURITY_TOL {
                diagnostics.push(BootstrapDiagnostic {
                    bond_id: bond.id.clone(),
                    message: format!("maturity {maturity} already has a knot"),
                });
                continue;
            }
        }

        let terms: Vec<(f64, f64, f64, f64)> = bond
            .payments()
            .into_iter()
            .map(|(t, amount)| {
                let (base, weight) = split_yield(&times, &yields, maturity, t);
                (t, amount, base, weight)
            })
            .collect();
        let price_at = |y: f64| -> (f64, f64) {
            terms.iter().fold((0.0, 0.0), |(pv, dpv), &(t, a, base, w)| {
                let d = a * (-t * (base + w * y)).exp();
                (pv + d, dpv - t * w * d)
            })
        };

        let price = bond.market_price;
        let (pv_lo, _) = price_at(YTM_LOWER);
        let (pv_hi, _) = price_at(YTM_UPPER);
        if !(price <= pv_lo && price >= pv_hi) {
            diagnostics.push(BootstrapDiagnostic {
                bond_id: bond.id.clone(),
                message: format!("price {price} outside attainable range [{pv_hi}, {pv_lo}]"),
            });
            continue;
        }
        let y = solve_decreasing(
            |y| {
                let (pv, dpv) = price_at(y);
                (pv - price, dpv)
            },
            YTM_LOWER,
            YTM_UPPER,
            1e-13 * price,
        );
        times.push(maturity);
        yields.push(y);
    }

    if times.is_empty() {
        return Err(Error::FitFailure(format!(
            "bootstrap placed no bonds ({} diagnostics)",
            diagnostics.len()
        )));
    }
    Ok(BootstrapCurve {
        knot_times: times,
        knot_yields: yields,
        diagnostics,
    })
}
