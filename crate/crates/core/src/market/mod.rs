//! Bond and market snapshot types, file I/O, and synthetic market generation.

mod io;
mod scenario;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{benchmark_companion_path, load_snapshot, save_snapshot, SnapshotFormat};
pub use scenario::{generate_daily_series, generate_scenario, generating_curve, Regime, ScenarioSpec};

/// Relative tolerance used when checking that maturity coincides with the
/// last coupon date.
const MATURITY_MATCH_TOL: f64 = 1e-12;

/// A single coupon payment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cashflow {
    /// Years from valuation date.
    pub time: f64,
    pub amount: f64,
}

/// A fixed-coupon bond observed on one day.
///
/// `cashflows` holds coupon payments only; the redemption of `face_value` at
/// `maturity` is implied. A zero-coupon bond has no cashflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub id: String,
    pub face_value: f64,
    pub maturity: f64,
    pub market_price: f64,
    #[serde(default)]
    pub cashflows: Vec<Cashflow>,
}

impl Bond {
    pub fn new(
        id: impl Into<String>,
        cashflows: Vec<Cashflow>,
        face_value: f64,
        maturity: f64,
        market_price: f64,
    ) -> Result<Self> {
        let bond = Self {
            id: id.into(),
            face_value,
            maturity,
            market_price,
            cashflows,
        };
        bond.validate()?;
        Ok(bond)
    }

    pub fn zero_coupon(id: impl Into<String>, face_value: f64, maturity: f64, market_price: f64) -> Result<Self> {
        Self::new(id, Vec::new(), face_value, maturity, market_price)
    }

    pub fn validate(&self) -> Result<()> {
        let id = Some(self.id.as_str());
        if self.id.is_empty() {
            return Err(Error::validation(None, "id", "bond id must be non-empty"));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::validation(id, "maturity", format!("must be positive, got {}", self.maturity)));
        }
        if !(self.face_value.is_finite() && self.face_value > 0.0) {
            return Err(Error::validation(id, "face_value", format!("must be positive, got {}", self.face_value)));
        }
        if !(self.market_price.is_finite() && self.market_price > 0.0) {
            return Err(Error::validation(
                id,
                "market_price",
                format!("must be positive, got {}", self.market_price),
            ));
        }
        for (i, cf) in self.cashflows.iter().enumerate() {
            if !(cf.time.is_finite() && cf.time > 0.0) {
                return Err(Error::validation(id, "cashflows", format!("cashflow {i} has non-positive time {}", cf.time)));
            }
            if !(cf.amount.is_finite() && cf.amount > 0.0) {
                return Err(Error::validation(
                    id,
                    "cashflows",
                    format!("cashflow {i} has non-positive amount {}", cf.amount),
                ));
            }
        }
        if let Some(i) = self.cashflows.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(Error::validation(
                id,
                "cashflows",
                format!("cashflow times not strictly increasing at index {}", i + 1),
            ));
        }
        if let Some(last) = self.cashflows.last() {
            if (last.time - self.maturity).abs() > MATURITY_MATCH_TOL * self.maturity.max(1.0) {
                return Err(Error::validation(
                    id,
                    "maturity",
                    format!("maturity {} differs from last cashflow time {}", self.maturity, last.time),
                ));
            }
        }
        Ok(())
    }

    /// All payments as `(time, amount)`, with the face value folded into the
    /// payment at maturity.
    pub fn payments(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.cashflows.iter().map(|cf| (cf.time, cf.amount)).collect();
        match out.last_mut() {
            Some(last) => {
                last.0 = self.maturity;
                last.1 += self.face_value;
            }
            None => out.push((self.maturity, self.face_value)),
        }
        out
    }

    pub fn is_zero_coupon(&self) -> bool {
        self.cashflows.is_empty()
    }

    /// Copy of this bond with the market price replaced.
    pub fn with_price(&self, market_price: f64) -> Self {
        Self {
            market_price,
            ..self.clone()
        }
    }
}

/// Risk-free reference curve, linearly interpolated in yield with flat
/// extrapolation at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCurve {
    pub tenors: Vec<f64>,
    pub rates: Vec<f64>,
}

impl BenchmarkCurve {
    pub fn new(tenors: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let curve = Self { tenors, rates };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tenors.len() != self.rates.len() {
            return Err(Error::validation(
                None,
                "benchmark",
                format!("{} tenors but {} rates", self.tenors.len(), self.rates.len()),
            ));
        }
        if self.tenors.len() < 2 {
            return Err(Error::validation(None, "benchmark", "at least two tenors required"));
        }
        if self.tenors.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::validation(None, "benchmark.tenors", "tenors must be positive"));
        }
        if self.tenors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(None, "benchmark.tenors", "tenors must be strictly increasing"));
        }
        if self.rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::validation(None, "benchmark.rates", "rates must be finite"));
        }
        Ok(())
    }

    /// Linear interpolation in yield, flat outside the tenor range.
    pub fn rate_at(&self, t: f64) -> f64 {
        linear_flat(&self.tenors, &self.rates, t)
    }
}

/// Piecewise-linear interpolation with flat extrapolation. `xs` must be
/// strictly increasing and non-empty.
pub(crate) fn linear_flat(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + w * (ys[hi] - ys[lo])
}

/// Bonds and benchmark observed on one business day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub date: String,
    pub benchmark: BenchmarkCurve,
    pub bonds: Vec<Bond>,
}

impl MarketSnapshot {
    pub fn new(date: impl Into<String>, bonds: Vec<Bond>, benchmark: BenchmarkCurve) -> Result<Self> {
        let snapshot = Self {
            date: date.into(),
            benchmark,
            bonds,
        };
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bonds.is_empty() {
            return Err(Error::validation(None, "bonds", "bonds non-empty"));
        }
        let mut seen = HashSet::new();
        for bond in &self.bonds {
            bond.validate()?;
            if !seen.insert(bond.id.as_str()) {
                return Err(Error::validation(Some(&bond.id), "id", "duplicate bond id"));
            }
        }
        self.benchmark.validate()
    }

    pub fn bond(&self, id: &str) -> Option<&Bond> {
        self.bonds.iter().find(|b| b.id == id)
    }

    /// Copy of the snapshot keeping only bonds for which `keep` is true.
    /// Benchmark and date are preserved; the result may be empty.
    pub fn filtered(&self, mut keep: impl FnMut(&Bond) -> bool) -> Self {
        Self {
            date: self.date.clone(),
            benchmark: self.benchmark.clone(),
            bonds: self.bonds.iter().filter(|b| keep(b)).cloned().collect(),
        }
    }

    /// Bond indices sorted by maturity, ties broken by id.
    pub fn maturity_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.bonds.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (&self.bonds[a], &self.bonds[b]);
            x.maturity.total_cmp(&y.maturity).then_with(|| x.id.cmp(&y.id))
        });
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coupon_bond(id: &str) -> Bond {
        Bond::new(
            id,
            vec![Cashflow { time: 1.0, amount: 3.0 }, Cashflow { time: 2.0, amount: 3.0 }],
            100.0,
            2.0,
            101.0,
        )
        .unwrap()
    }

    fn bench() -> BenchmarkCurve {
        BenchmarkCurve::new(vec![1.0, 5.0], vec![0.02, 0.03]).unwrap()
    }

    #[test]
    fn payments_fold_face_into_last_coupon() {
        assert_eq!(coupon_bond("A").payments(), vec![(1.0, 3.0), (2.0, 103.0)]);
        let z = Bond::zero_coupon("Z", 100.0, 3.0, 90.0).unwrap();
        assert_eq!(z.payments(), vec![(3.0, 100.0)]);
    }

    #[test]
    fn unordered_cashflows_name_the_bond() {
        let err = Bond::new(
            "BAD",
            vec![Cashflow { time: 2.0, amount: 3.0 }, Cashflow { time: 1.0, amount: 3.0 }],
            100.0,
            1.0,
            100.0,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("BAD") && msg.contains("cashflows"), "{msg}");
    }

    #[test]
    fn maturity_must_match_last_coupon() {
        let err = Bond::new("M", vec![Cashflow { time: 1.0, amount: 3.0 }], 100.0, 2.0, 100.0).unwrap_err();
        assert!(err.to_string().contains("maturity"));
    }

    #[test]
    fn negative_price_rejected() {
        let err = Bond::zero_coupon("N", 100.0, 1.0, -5.0).unwrap_err();
        assert!(err.to_string().contains("market_price"));
    }

    #[test]
    fn snapshot_invariants() {
        let err = MarketSnapshot::new("d", vec![], bench()).unwrap_err();
        assert!(err.to_string().contains("bonds non-empty"));
        let err = MarketSnapshot::new("d", vec![coupon_bond("A"), coupon_bond("A")], bench()).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(MarketSnapshot::new("d", vec![coupon_bond("A"), coupon_bond("B")], bench()).is_ok());
    }

    #[test]
    fn benchmark_interpolation() {
        let b = bench();
        assert_eq!(b.rate_at(0.1), 0.02);
        assert_eq!(b.rate_at(10.0), 0.03);
        assert!((b.rate_at(3.0) - 0.025).abs() < 1e-15);
        assert!(BenchmarkCurve::new(vec![1.0], vec![0.02]).is_err());
        assert!(BenchmarkCurve::new(vec![2.0, 1.0], vec![0.02, 0.03]).is_err());
    }
}
