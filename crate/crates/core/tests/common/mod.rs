//! Shared oracles and fixtures for integration tests. Nothing here calls
//! into the code path it checks.

#![allow(dead_code)]

use curvekit_core::kr::KrProblem;
use curvekit_core::market::{generate_scenario, BenchmarkCurve, Bond, Cashflow, MarketSnapshot, ScenarioSpec};
use curvekit_core::nn::*;
use curvekit_core::nss::NssParams;
use curvekit_core::{Result, YieldCurve};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 24)
}

/// Independent bond price: sum of coupons discounted one by one, plus face
/// value at maturity, from a yield function.
pub fn naive_price(bond: &Bond, y: &dyn Fn(f64) -> f64) -> f64 {
    let mut pv = 0.0;
    for cf in &bond.cashflows {
        pv += cf.amount * (-cf.time * y(cf.time)).exp();
    }
    pv + bond.face_value * (-bond.maturity * y(bond.maturity)).exp()
}

/// Annual-coupon bond priced exactly off `curve`.
pub fn priced_bond(id: &str, maturity: f64, coupon: f64, curve: &dyn YieldCurve) -> Result<Bond> {
    let mut flows = Vec::new();
    let mut t = maturity;
    while t > 1e-9 && coupon > 0.0 {
        flows.push(Cashflow { time: t, amount: coupon * 100.0 });
        t -= 1.0;
    }
    flows.reverse();
    let y = |t: f64| curve.yield_at(t).unwrap();
    let shell = Bond::new(id, flows, 100.0, maturity, 1.0)?;
    let price = naive_price(&shell, &y);
    Ok(shell.with_price(price))
}

pub fn flat_benchmark(rate: f64) -> BenchmarkCurve {
    BenchmarkCurve::new(vec![0.25, 30.0], vec![rate, rate]).unwrap()
}

/// Snapshot of annual-coupon bonds priced exactly off `curve`.
pub fn snapshot_off(curve: &dyn YieldCurve, maturities: &[f64], coupon: f64) -> MarketSnapshot {
    let bonds = maturities
        .iter()
        .enumerate()
        .map(|(i, &t)| priced_bond(&format!("S{i:02}"), t, coupon, curve).unwrap())
        .collect();
    MarketSnapshot::new("fixture", bonds, flat_benchmark(0.02)).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() <= abs_floor
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Worst per-parameter relative mismatch, counting entries within
/// `abs_floor` as exact.
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let diff = (a - n).abs();
            if diff <= abs_floor {
                0.0
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}

pub fn random_nss_params(rng: &mut ChaCha8Rng) -> NssParams {
    let log_decay = |rng: &mut ChaCha8Rng| rng.random_range(0.05f64.ln()..30f64.ln()).exp();
    NssParams {
        beta0: rng.random_range(0.0..0.06),
        beta1: rng.random_range(-0.05..0.05),
        beta2: rng.random_range(-0.05..0.05),
        beta3: rng.random_range(-0.05..0.05),
        lambda1: log_decay(rng),
        lambda2: log_decay(rng),
    }
}

pub fn random_nn_params(rng: &mut ChaCha8Rng, hidden: usize) -> NnParams {
    NnParams {
        w: (0..hidden).map(|_| rng.random_range(-0.4..0.4)).collect(),
        b: (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
        v: (0..hidden).map(|_| rng.random_range(-0.03..0.03)).collect(),
        c: rng.random_range(0.01..0.05),
    }
}

/// Runs the finite-difference comparison for every loss on one random case
/// and returns the worst relative error seen.
pub fn nn_gradient_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = rng.random_range(1..=5);
    let p = random_nn_params(&mut rng, hidden);
    let snap = generate_scenario(&ScenarioSpec {
        n_bonds: rng.random_range(3..=10),
        maturity_range: [0.5, 20.0],
        price_noise_sd: 0.002,
        seed: seed + 100,
        ..Default::default()
    })
    .unwrap();
    let config = TrainConfig {
        gamma1: rng.random_range(0.0..1e4),
        gamma2: rng.random_range(0.0..1e4),
        ..Default::default()
    };
    let grid = config.grid.tenors().to_vec();
    let x = p.to_flat();
    let unflat = |x: &[f64]| NnParams::from_flat(hidden, x).unwrap();
    let eps = 1e-6;
    let floor = 1e-8;

    let mut worst = 0.0f64;
    let mut check = |analytic: NnParams, f: &dyn Fn(&[f64]) -> f64| {
        let numeric = fd_gradient(f, &x, eps);
        worst = worst.max(worst_relative_error(&analytic.to_flat(), &numeric, floor));
    };
    check(loss_error_grad(&p, &snap).1, &|x| loss_error(&unflat(x), &snap));
    check(loss_smooth_grad(&p, &grid).1, &|x| loss_smooth(&unflat(x), &grid));
    check(loss_trend_grad(&p, &snap.benchmark, &grid).1, &|x| {
        loss_trend(&unflat(x), &snap.benchmark, &grid)
    });
    check(total_loss_grad(&p, &snap, &config).1, &|x| total_loss(&unflat(x), &snap, &config));
    worst
}

/// Conjugate gradients on the objective's normal equations in alpha, using
/// only products with C, K and W.
pub fn first_order_oracle(problem: &KrProblem, iterations: usize) -> DVector<f64> {
    let c = &problem.cashflows;
    let k = &problem.kernel;
    let w = &problem.weights;
    let residual = &problem.prices - c.column_sum();
    let hess = |v: &DVector<f64>| -> DVector<f64> {
        let ckv = c * (k * v);
        let wckv = ckv.component_mul(w);
        k * (c.transpose() * wckv) + problem.lambda * (k * v)
    };
    let b = k * (c.transpose() * residual.component_mul(w));
    let n = problem.anchor_times.len();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut d = r.clone();
    let mut rr = r.dot(&r);
    for it in 0..iterations {
        if rr == 0.0 {
            break;
        }
        let hd = hess(&d);
        let curvature = d.dot(&hd);
        if curvature <= 0.0 {
            break;
        }
        let step = rr / curvature;
        x += step * &d;
        if (it + 1) % n == 0 {
            // periodic restart from the true residual
            r = &b - hess(&x);
            rr = r.dot(&r);
            d = r.clone();
            continue;
        }
        r -= step * hd;
        let rr_next = r.dot(&r);
        d = &r + (rr_next / rr) * &d;
        rr = rr_next;
    }
    x
}
