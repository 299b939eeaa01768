mod common;

use common::{naive_price, snapshot_off};
use curvekit_core::market::{generate_scenario, ScenarioSpec};
use curvekit_core::nss::NssParams;
use curvekit_core::pricing::{
    bootstrap, duration_weights, forward_rate, macaulay_duration, present_value, yield_to_maturity, FlatCurve,
};
use curvekit_core::{Regime, YieldCurve};
use proptest::prelude::*;

fn random_bonds(seed: u64, n: usize) -> Vec<curvekit_core::Bond> {
    generate_scenario(&ScenarioSpec {
        n_bonds: n,
        seed,
        regime: Regime::Falling,
        maturity_range: [0.1, 30.0],
        coupon_range: [0.0, 0.08],
        price_noise_sd: 0.01,
        ..Default::default()
    })
    .unwrap()
    .bonds
}

#[test]
fn ytm_round_trip_on_200_bonds() {
    for bond in random_bonds(1, 200) {
        let y = yield_to_maturity(&bond).unwrap();
        let pv = naive_price(&bond, &|_| y);
        assert!((pv - bond.market_price).abs() <= 1e-8 * bond.market_price, "{}", bond.id);
    }
}

#[test]
fn present_value_matches_naive_sum() {
    let curve = NssParams {
        beta0: 0.04,
        beta1: -0.02,
        beta2: 0.01,
        beta3: -0.01,
        lambda1: 1.5,
        lambda2: 9.0,
    };
    for bond in random_bonds(2, 50) {
        let a = present_value(&curve, &bond).unwrap();
        let b = naive_price(&bond, &|t| curve.yield_at(t).unwrap());
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn duration_matches_definition() {
    for bond in random_bonds(3, 50) {
        let y = yield_to_maturity(&bond).unwrap();
        let mut weighted = 0.0;
        let mut total = 0.0;
        for cf in &bond.cashflows {
            let pv = cf.amount * (-y * cf.time).exp();
            weighted += cf.time * pv;
            total += pv;
        }
        let pv = bond.face_value * (-y * bond.maturity).exp();
        weighted += bond.maturity * pv;
        total += pv;
        let d = macaulay_duration(&bond).unwrap();
        assert!((d - weighted / total).abs() <= 1e-10 * d);
        assert!(d <= bond.maturity + 1e-12);
    }
}

#[test]
fn zero_coupon_duration_is_maturity() {
    let bond = curvekit_core::Bond::zero_coupon("Z", 100.0, 7.0, 80.0).unwrap();
    assert!((macaulay_duration(&bond).unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn duration_weights_formula() {
    let snap = generate_scenario(&ScenarioSpec {
        n_bonds: 10,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let w = duration_weights(&snap).unwrap();
    let m = snap.bonds.len() as f64;
    for (bond, wj) in snap.bonds.iter().zip(&w) {
        let dp = macaulay_duration(bond).unwrap() * bond.market_price;
        assert!((wj - 1.0 / (m * dp * dp)).abs() <= 1e-14 * wj);
    }
}

#[test]
fn bootstrap_reprices_noise_free_snapshots() {
    for (seed, regime) in [(5, Regime::Flat), (6, Regime::Rising), (7, Regime::Falling)] {
        let snap = generate_scenario(&ScenarioSpec {
            n_bonds: 40,
            seed,
            regime,
            maturity_range: [0.1, 30.0],
            ..Default::default()
        })
        .unwrap();
        let curve = bootstrap(&snap).unwrap();
        assert!(curve.diagnostics.is_empty());
        for bond in &snap.bonds {
            let pv = naive_price(bond, &|t| curve.yield_at(t).unwrap());
            assert!((pv - bond.market_price).abs() <= 1e-8 * bond.market_price);
        }
    }
}

#[test]
fn bootstrap_of_flat_market_is_flat() {
    let flat = FlatCurve::new(0.027);
    let snap = snapshot_off(&flat, &[0.5, 1.0, 2.0, 3.5, 5.0, 7.0, 10.0, 20.0], 0.04);
    let curve = bootstrap(&snap).unwrap();
    for y in &curve.knot_yields {
        assert!((y - 0.027).abs() < 1e-12);
    }
}

#[test]
fn forward_rate_of_flat_curve() {
    let f = forward_rate(&FlatCurve::new(0.031), 4.0, 1e-4).unwrap();
    assert!((f - 0.031).abs() < 1e-10);
    assert!(forward_rate(&FlatCurve::new(0.031), 1e-5, 1e-4).is_err());
}

proptest! {
    #[test]
    fn ytm_recovers_flat_rate(rate in -0.05f64..0.5, maturity in 0.1f64..30.0, coupon in 0.0f64..0.1) {
        let curve = FlatCurve::new(rate);
        let snap = snapshot_off(&curve, &[maturity], coupon);
        let y = yield_to_maturity(&snap.bonds[0]).unwrap();
        prop_assert!((y - rate).abs() < 1e-9);
    }

    #[test]
    fn price_decreases_in_yield(maturity in 0.5f64..30.0, coupon in 0.0f64..0.1, y in -0.05f64..0.3) {
        let snap = snapshot_off(&FlatCurve::new(0.03), &[maturity], coupon);
        let bond = &snap.bonds[0];
        let lo = present_value(&FlatCurve::new(y), bond).unwrap();
        let hi = present_value(&FlatCurve::new(y + 0.001), bond).unwrap();
        prop_assert!(hi < lo);
    }
}
