mod common;

use common::naive_price;
use curvekit_core::evaluation::*;
use curvekit_core::market::{generate_daily_series, generate_scenario, generating_curve, ScenarioSpec};
use curvekit_core::nn::TrainConfig;
use curvekit_core::nss::{NssConfig, NssParams};
use curvekit_core::pricing::{yield_to_maturity, SpreadCurve};
use curvekit_core::{
    BenchmarkCurve, Bucket, CurveEstimator, Estimator, MarketSnapshot, Regime, Result, TenorGrid, YieldCurve,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Always answers with the curve the scenario was generated from.
struct Oracle(SpreadCurve<BenchmarkCurve>);

impl CurveEstimator for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn fit_curve(&self, _: &MarketSnapshot) -> Result<Box<dyn YieldCurve>> {
        Ok(Box::new(self.0.clone()))
    }
}

fn random_nss(rng: &mut ChaCha8Rng) -> NssParams {
    NssParams {
        beta0: rng.random_range(0.01..0.06),
        beta1: rng.random_range(-0.03..0.03),
        beta2: rng.random_range(-0.05..0.05),
        beta3: rng.random_range(-0.05..0.05),
        lambda1: rng.random_range(0.2..5.0),
        lambda2: rng.random_range(5.0..20.0),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn scenario(seed: u64, n: usize, noise: f64) -> MarketSnapshot {
    generate_scenario(&ScenarioSpec {
        n_bonds: n,
        seed,
        regime: Regime::Rising,
        price_noise_sd: noise,
        maturity_range: [0.25, 20.0],
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn metrics_match_naive_recomputation() {
    let grid = TenorGrid::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..20 {
        let a = random_nss(&mut rng);
        let b = random_nss(&mut rng);
        let ya: Vec<f64> = grid.tenors().iter().map(|&t| a.yield_at(t).unwrap()).collect();
        let yb: Vec<f64> = grid.tenors().iter().map(|&t| b.yield_at(t).unwrap()).collect();

        let mut sq = 0.0;
        let mut worst = 0.0f64;
        for k in 0..ya.len() {
            sq += (ya[k] - yb[k]).powi(2);
            worst = worst.max((ya[k] - yb[k]).abs());
        }
        let naive_rmse = (sq / ya.len() as f64).sqrt();
        let r = rmse_curve(&a, &b, &grid).unwrap();
        let m = mad_curve(&a, &b, &grid).unwrap();
        assert!(close(r, naive_rmse), "case {i}");
        assert!(close(m, worst), "case {i}");
        assert!(m >= r);

        let snap = scenario(i, 8, 0.001);
        let mut sq = 0.0;
        for bond in &snap.bonds {
            sq += (a.yield_at(bond.maturity).unwrap() - yield_to_maturity(bond).unwrap()).powi(2);
        }
        assert!(close(rmse_ytm(&a, &snap).unwrap(), (sq / 8.0).sqrt()));

        let series: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..0.002)).collect();
        let mut hits = 0;
        for v in &series {
            if *v < 0.001 {
                hits += 1;
            }
        }
        assert_eq!(hit_rate(&series, 0.001), hits as f64 / 30.0);
    }
}

#[test]
fn bucket_metrics_partition_the_grid() {
    let grid = TenorGrid::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_nss(&mut rng);
    let b = random_nss(&mut rng);
    let ya = sample_curve(&a, grid.tenors()).unwrap();
    let yb = sample_curve(&b, grid.tenors()).unwrap();
    let mut total = 0.0;
    let mut count = 0;
    for bucket in Bucket::PARTS {
        let n = grid.bucket_indices(bucket).len();
        total += bucket_rmse(&ya, &yb, &grid, bucket).unwrap().powi(2) * n as f64;
        count += n;
    }
    assert_eq!(count, grid.len());
    let full = bucket_rmse(&ya, &yb, &grid, Bucket::Full).unwrap();
    assert!(close(full, (total / count as f64).sqrt()));
}

#[test]
fn perturb_rows_and_identity_bump() {
    let snap = scenario(3, 20, 0.0);
    let long = snap.bonds.last().unwrap().id.clone();
    let grid = TenorGrid::standard();
    for est in [Estimator::Bootstrap, Estimator::Nss(NssConfig::default()), Estimator::Kr(Default::default())] {
        let report = perturb_price_experiment(&snap, &est, &long, &[0.0, 0.03, 0.05, 0.10], &grid).unwrap();
        let ExperimentDetail::Perturb(detail) = &report.detail else {
            panic!("wrong detail")
        };
        assert_eq!(detail.rows.len(), 4);
        assert_eq!(detail.rows[0].rmse_curve, Some(0.0));
        assert_eq!(detail.rows[0].mad, Some(0.0));
        assert_eq!(report.failure_count, 0);
    }
}

#[test]
fn bootstrap_response_grows_with_bump() {
    let snap = scenario(4, 20, 0.0);
    let bond = &snap.bonds[12];
    let grid = TenorGrid::new(vec![bond.maturity - 1e-3, bond.maturity]).unwrap();
    let bumps = [0.01, 0.03, 0.05, 0.10];
    let report = perturb_price_experiment(&snap, &Estimator::Bootstrap, &bond.id, &bumps, &grid).unwrap();
    let ExperimentDetail::Perturb(detail) = &report.detail else {
        panic!("wrong detail")
    };
    let mads: Vec<f64> = detail.rows.iter().map(|r| r.mad.unwrap()).collect();
    assert!(mads.windows(2).all(|w| w[1] > w[0]), "{mads:?}");
}

#[test]
fn drop_sets_are_shared_across_estimators() {
    let snap = scenario(6, 25, 0.001);
    let grid = TenorGrid::standard();
    let counts = [0, 1, 5];
    let a = drop_bonds_experiment(&snap, &Estimator::Bootstrap, &counts, 4, 9, &grid).unwrap();
    let b = drop_bonds_experiment(&snap, &Estimator::Kr(Default::default()), &counts, 4, 9, &grid).unwrap();
    let ids = |r: &EvaluationReport| -> Vec<Vec<String>> {
        let ExperimentDetail::Drop(d) = &r.detail else { panic!() };
        d.rows.iter().flat_map(|row| row.replications.iter().map(|x| x.dropped_ids.clone())).collect()
    };
    assert_eq!(ids(&a), ids(&b));
    let ExperimentDetail::Drop(d) = &a.detail else { panic!() };
    assert_eq!(d.rows.len(), 3);
    assert_eq!(d.rows[0].mean_rmse_curve, Some(0.0));
    assert_eq!(d.rows[0].mean_mad, Some(0.0));
    assert!(d.rows[2].replications.iter().all(|r| r.dropped_ids.len() == 5));
    let other_seed = drop_bonds_experiment(&snap, &Estimator::Bootstrap, &counts, 4, 10, &grid).unwrap();
    assert_ne!(ids(&a), ids(&other_seed));
}

#[test]
fn drop_averages_replay() {
    let snap = scenario(7, 20, 0.001);
    let report =
        drop_bonds_experiment(&snap, &Estimator::Kr(Default::default()), &[1, 3], 5, 1, &TenorGrid::standard()).unwrap();
    let ExperimentDetail::Drop(d) = &report.detail else { panic!() };
    for row in &d.rows {
        let rs: Vec<f64> = row.replications.iter().filter_map(|r| r.rmse_curve).collect();
        assert!(close(row.mean_rmse_curve.unwrap(), rs.iter().sum::<f64>() / rs.len() as f64));
    }
}

#[test]
fn too_many_drops_rejected() {
    let snap = scenario(8, 5, 0.0);
    assert!(drop_bonds_experiment(&snap, &Estimator::Bootstrap, &[5], 2, 0, &TenorGrid::standard()).is_err());
}

#[test]
fn stability_on_identical_days() {
    let snap = scenario(9, 15, 0.0);
    let days = vec![snap.clone(), snap.clone(), snap];
    let grid = TenorGrid::standard();
    let report =
        stability_experiment(&days, &Estimator::Kr(Default::default()), &grid, &Bucket::ALL, DEFAULT_HIT_THRESHOLD)
            .unwrap();
    for bucket in Bucket::ALL {
        assert_eq!(report.metric(bucket, "hit_rate"), Some(1.0));
        assert_eq!(report.metric(bucket, "mean_rmse_curve"), Some(0.0));
    }
}

#[test]
fn stability_series_replays_from_stored_curves() {
    let spec = ScenarioSpec {
        n_bonds: 30,
        seed: 2,
        regime: Regime::Rising,
        maturity_range: [0.5, 20.0],
        ..Default::default()
    };
    let days = generate_daily_series(&spec, 30, 0.0005).unwrap();
    let grid = TenorGrid::standard();
    let report =
        stability_experiment(&days, &Estimator::Kr(Default::default()), &grid, &Bucket::ALL, DEFAULT_HIT_THRESHOLD)
            .unwrap();
    let ExperimentDetail::Stability(d) = &report.detail else { panic!() };
    assert_eq!(d.pairs.len(), 29);
    for (i, pair) in d.pairs.iter().enumerate() {
        let prev = d.curves[i].as_ref().unwrap();
        let cur = d.curves[i + 1].as_ref().unwrap();
        for bv in &pair.rmse_curve {
            let idx = grid.bucket_indices(bv.bucket);
            let mut sq = 0.0;
            for &k in &idx {
                sq += (cur[k] - prev[k]).powi(2);
            }
            assert!(close(bv.value, (sq / idx.len() as f64).sqrt()));
        }
    }
    assert_eq!(d.fixed_tenors.len(), 3);
    assert!(d.fixed_tenors.iter().all(|s| s.fitted.len() == 30 && s.benchmark.len() == 30));

    let strict = stability_experiment(&days, &Estimator::Kr(Default::default()), &grid, &Bucket::ALL, 0.0).unwrap();
    assert_eq!(strict.metric(Bucket::Full, "hit_rate"), Some(0.0));
}

#[test]
fn loo_with_generating_curve_is_exact() {
    let spec = ScenarioSpec {
        n_bonds: 40,
        seed: 12,
        maturity_range: [0.5, 25.0],
        ..Default::default()
    };
    let snap = generate_scenario(&spec).unwrap();
    let oracle = Oracle(generating_curve(&spec));
    let report = loo_experiment(&snap, &oracle, 10, None, 3).unwrap();
    let ExperimentDetail::Loo(d) = &report.detail else { panic!() };
    assert_eq!(d.columns.iter().map(|c| c.bucket).collect::<Vec<_>>(), Bucket::ALL.to_vec());
    for c in &d.columns {
        assert!(c.rmse_ytm.unwrap() <= 1e-6);
    }
}

#[test]
fn loo_columns_replay_from_records() {
    let snap = scenario(13, 30, 0.001);
    let report = loo_experiment(&snap, &Estimator::Kr(Default::default()), 10, None, 5).unwrap();
    let ExperimentDetail::Loo(d) = &report.detail else { panic!() };
    for col in &d.columns {
        let recs: Vec<_> = d.records.iter().filter(|r| r.bucket == col.bucket).collect();
        assert_eq!(recs.len(), 10);
        for r in &recs {
            assert!(col.bucket.contains(r.maturity));
            let bond = snap.bond(&r.bond_id).unwrap();
            assert!(close(r.ytm, yield_to_maturity(bond).unwrap()));
        }
        let mean = recs.iter().map(|r| (r.fitted_yield - r.ytm).powi(2)).sum::<f64>() / recs.len() as f64;
        assert!(close(col.rmse_ytm.unwrap(), mean.sqrt()));
        assert_eq!(report.metric(col.bucket, "rmse_ytm"), col.rmse_ytm);
    }
    let short = loo_experiment(&snap, &Estimator::Kr(Default::default()), 4, Some(Bucket::Short), 5).unwrap();
    let ExperimentDetail::Loo(d) = &short.detail else { panic!() };
    assert_eq!(d.columns.len(), 1);
    assert!(d.records.iter().all(|r| r.maturity < 2.0));
}

#[test]
fn loo_needs_two_bonds_per_bucket() {
    let snap = generate_scenario(&ScenarioSpec {
        n_bonds: 6,
        maturity_range: [3.0, 9.0],
        ..Default::default()
    })
    .unwrap();
    assert!(loo_experiment(&snap, &Estimator::Bootstrap, 3, None, 0).is_err());
    assert!(loo_experiment(&snap, &Estimator::Bootstrap, 3, Some(Bucket::Medium), 0).is_ok());
}

#[test]
fn hyperscan_matches_direct_training() {
    let snap = scenario(14, 12, 0.001);
    let base = TrainConfig {
        seed: 4,
        ..Default::default()
    };
    let sweep = HyperGrid {
        learning_rates: vec![1e-7, 1e-8],
        epochs: vec![20, 5, 10],
        gamma1: vec![1e3],
        gamma2: vec![0.0, 1e4],
    };
    let report = hyperparameter_scan(&snap, &base, &sweep).unwrap();
    let ExperimentDetail::Hyperscan(d) = &report.detail else { panic!() };
    assert_eq!(d.rows.len(), 12);
    for row in &d.rows {
        let config = TrainConfig {
            learning_rate: row.learning_rate,
            epochs: row.epochs,
            gamma1: row.gamma1,
            gamma2: row.gamma2,
            ..base.clone()
        };
        let direct = curvekit_core::nn::train(&snap, &config).unwrap();
        assert_eq!(row.rmse_ytm.unwrap(), rmse_ytm(&direct, &snap).unwrap());
    }
}

#[test]
fn experiments_are_deterministic() {
    let snap = scenario(15, 20, 0.001);
    let grid = TenorGrid::standard();
    let nn = Estimator::Nn(TrainConfig {
        epochs: 10,
        ..Default::default()
    });
    let run = || {
        let reports = vec![
            drop_bonds_experiment(&snap, &nn, &[1, 5], 3, 2, &grid).unwrap(),
            loo_experiment(&snap, &nn, 3, None, 2).unwrap(),
            perturb_price_experiment(&snap, &nn, &snap.bonds[19].id, &[0.03], &grid).unwrap(),
        ];
        let mut csv = Vec::new();
        write_reports_csv(&reports, &mut csv).unwrap();
        (serde_json::to_string(&reports).unwrap(), csv)
    };
    assert_eq!(run(), run());
}

#[test]
fn csv_export_shape() {
    let snap = scenario(16, 20, 0.001);
    let report = loo_experiment(&snap, &Estimator::Kr(Default::default()), 2, None, 1).unwrap();
    let mut out = Vec::new();
    write_reports_csv(&[report], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("experiment,estimator,bucket,metric,value,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("loo,kr,<2Y,rmse_ytm,"));
    assert!(rows[0].ends_with(",1"));
}

#[test]
fn report_json_round_trips() {
    let snap = scenario(17, 20, 0.001);
    let report = drop_bonds_experiment(&snap, &Estimator::Bootstrap, &[1, 2], 2, 0, &TenorGrid::standard()).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<EvaluationReport>(&text).unwrap(), report);
    assert!(!text.contains("generated_at"));
}

#[test]
fn naive_price_agrees_with_rmse_inputs() {
    // The metrics rely on YTM; check the YTM of a generated bond reprices it.
    let snap = scenario(18, 5, 0.0);
    for bond in &snap.bonds {
        let y = yield_to_maturity(bond).unwrap();
        let p = naive_price(bond, &|_| y);
        assert!((p - bond.market_price).abs() <= 1e-8 * bond.market_price);
    }
}

proptest! {
    #[test]
    fn mad_dominates_rmse_and_rmse_is_symmetric(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_nss(&mut rng);
        let b = random_nss(&mut rng);
        let grid = TenorGrid::standard();
        let r_ab = rmse_curve(&a, &b, &grid).unwrap();
        let r_ba = rmse_curve(&b, &a, &grid).unwrap();
        prop_assert_eq!(r_ab, r_ba);
        prop_assert!(mad_curve(&a, &b, &grid).unwrap() >= r_ab);
    }

    #[test]
    fn hit_rate_in_unit_interval(values in proptest::collection::vec(0.0f64..0.01, 0..50), threshold in 0.0f64..0.01) {
        let h = hit_rate(&values, threshold);
        prop_assert!((0.0..=1.0).contains(&h));
    }
}
