use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    bucket_rmse, hit_rate, max_abs_diff, rmse, sample_curve, CurveSample, EvaluationReport, FailureRecord,
    MetricRow, Provenance,
};
use crate::error::{Error, Result};
use crate::estimator::CurveEstimator;
use crate::grid::{Bucket, TenorGrid};
use crate::market::MarketSnapshot;
use crate::nn::{init_params, train_from, TrainConfig};
use crate::pricing::{yield_to_maturity, YieldCurve};

/// Experiment-specific tables behind a report's headline metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentDetail {
    Perturb(PerturbDetail),
    Drop(DropDetail),
    Stability(StabilityDetail),
    Loo(LooDetail),
    Hyperscan(HyperscanDetail),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbDetail {
    pub bond_id: String,
    pub base_curve: CurveSample,
    pub rows: Vec<PerturbRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbRow {
    pub bump: f64,
    pub rmse_curve: Option<f64>,
    pub mad: Option<f64>,
    pub curve: Option<CurveSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropDetail {
    pub rows: Vec<DropRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRow {
    pub count: usize,
    pub mean_rmse_curve: Option<f64>,
    pub mean_mad: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    pub replications: Vec<DropReplication>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropReplication {
    pub replication: usize,
    pub dropped_ids: Vec<String>,
    pub rmse_curve: Option<f64>,
    pub mad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityDetail {
    pub threshold: f64,
    pub grid: Vec<f64>,
    pub dates: Vec<String>,
    /// Fitted curve per day on `grid`; `None` where the fit failed.
    pub curves: Vec<Option<Vec<f64>>>,
    pub pairs: Vec<StabilityPair>,
    pub hit_rates: Vec<BucketValue>,
    pub fixed_tenors: Vec<TenorSeries>,
}

/// Day-over-day RMSE per bucket between `previous` and `date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub previous: String,
    pub date: String,
    pub rmse_curve: Vec<BucketValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketValue {
    pub bucket: Bucket,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenorSeries {
    pub label: String,
    pub tenor: f64,
    pub fitted: Vec<Option<f64>>,
    pub benchmark: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooDetail {
    pub columns: Vec<LooColumn>,
    pub records: Vec<LooRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooColumn {
    pub bucket: Bucket,
    pub rmse_ytm: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

/// One held-out fit. `bucket` is the column the bond was drawn for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRecord {
    pub bucket: Bucket,
    pub replication: usize,
    pub bond_id: String,
    pub maturity: f64,
    pub ytm: f64,
    pub fitted_yield: f64,
    pub squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperscanDetail {
    pub rows: Vec<HyperscanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperscanRow {
    pub learning_rate: f64,
    pub epochs: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub rmse_ytm: Option<f64>,
}

fn fail(context: impl Into<String>, err: &Error) -> FailureRecord {
    FailureRecord {
        context: context.into(),
        message: err.to_string(),
    }
}

fn fit_sampled(estimator: &dyn CurveEstimator, snapshot: &MarketSnapshot, tenors: &[f64]) -> Result<Vec<f64>> {
    let curve = estimator.fit_curve(snapshot)?;
    sample_curve(curve.as_ref(), tenors)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn report(
    experiment: &str,
    estimator: &dyn CurveEstimator,
    metrics: Vec<MetricRow>,
    failures: Vec<FailureRecord>,
    seed: Option<u64>,
    settings: serde_json::Value,
    detail: ExperimentDetail,
) -> EvaluationReport {
    EvaluationReport {
        experiment: experiment.into(),
        estimator: estimator.name(),
        metrics,
        failure_count: failures.len(),
        failures,
        provenance: Provenance {
            estimator_config: estimator.config(),
            seed,
            settings,
        },
        detail,
        metadata: None,
    }
}

fn full(metric: String, value: f64) -> MetricRow {
    MetricRow {
        bucket: Bucket::Full,
        metric,
        value,
    }
}

/// Refits with one bond's price scaled by `1 + bump` for each bump and
/// compares every refit against the unperturbed fit on `grid`.
pub fn perturb_price_experiment(
    snapshot: &MarketSnapshot,
    estimator: &dyn CurveEstimator,
    bond_id: &str,
    bumps: &[f64],
    grid: &TenorGrid,
) -> Result<EvaluationReport> {
    let index = snapshot
        .bonds
        .iter()
        .position(|b| b.id == bond_id)
        .ok_or_else(|| Error::validation(Some(bond_id), "bond", "not in snapshot"))?;
    let tenors = grid.tenors();
    let base = fit_sampled(estimator, snapshot, tenors)?;

    let outcomes: Vec<Result<Vec<f64>>> = bumps
        .par_iter()
        .map(|&bump| {
            let mut bumped = snapshot.clone();
            let bond = &mut bumped.bonds[index];
            bond.market_price *= 1.0 + bump;
            bumped.validate()?;
            fit_sampled(estimator, &bumped, tenors)
        })
        .collect();

    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    for (&bump, outcome) in bumps.iter().zip(outcomes) {
        match outcome {
            Ok(yields) => {
                let r = rmse(&yields, &base);
                let m = max_abs_diff(&yields, &base);
                metrics.push(full(format!("rmse_curve[bump={bump}]"), r));
                metrics.push(full(format!("mad[bump={bump}]"), m));
                rows.push(PerturbRow {
                    bump,
                    rmse_curve: Some(r),
                    mad: Some(m),
                    curve: Some(CurveSample {
                        label: format!("bump={bump}"),
                        tenors: tenors.to_vec(),
                        yields,
                    }),
                });
            }
            Err(e) => {
                failures.push(fail(format!("bump={bump}"), &e));
                rows.push(PerturbRow {
                    bump,
                    rmse_curve: None,
                    mad: None,
                    curve: None,
                });
            }
        }
    }
    let detail = ExperimentDetail::Perturb(PerturbDetail {
        bond_id: bond_id.into(),
        base_curve: CurveSample {
            label: "base".into(),
            tenors: tenors.to_vec(),
            yields: base,
        },
        rows,
    });
    Ok(report(
        "perturb",
        estimator,
        metrics,
        failures,
        None,
        json!({ "bond_id": bond_id, "bumps": bumps, "grid": tenors }),
        detail,
    ))
}

/// Indices of the bonds to drop: `sets[c][r]` is replication `r` for
/// `counts[c]`. Depends only on the snapshot size, counts, `n_mc` and
/// `seed`, so every estimator sees the same drops.
pub fn drop_sets(n_bonds: usize, counts: &[usize], n_mc: usize, seed: u64) -> Vec<Vec<Vec<usize>>> {
    counts
        .iter()
        .map(|&count| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(count as u64);
            (0..n_mc)
                .map(|_| {
                    let mut idx = sample(&mut rng, n_bonds, count).into_vec();
                    idx.sort_unstable();
                    idx
                })
                .collect()
        })
        .collect()
}

/// Monte Carlo bond removal: for each count, `n_mc` random subsets of that
/// size are dropped and the refit is compared with the all-bonds fit.
pub fn drop_bonds_experiment(
    snapshot: &MarketSnapshot,
    estimator: &dyn CurveEstimator,
    counts: &[usize],
    n_mc: usize,
    seed: u64,
    grid: &TenorGrid,
) -> Result<EvaluationReport> {
    if n_mc == 0 {
        return Err(Error::validation(None, "n_mc", "at least one replication required"));
    }
    if let Some(&c) = counts.iter().find(|&&c| c >= snapshot.bonds.len()) {
        return Err(Error::Precondition(format!(
            "cannot drop {c} of {} bonds",
            snapshot.bonds.len()
        )));
    }
    let tenors = grid.tenors();
    let base = fit_sampled(estimator, snapshot, tenors)?;
    let sets = drop_sets(snapshot.bonds.len(), counts, n_mc, seed);

    let jobs: Vec<(usize, usize)> = (0..counts.len()).flat_map(|c| (0..n_mc).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let dropped = &sets[c][r];
            let mut i = 0;
            let reduced = snapshot.filtered(|_| {
                let keep = dropped.binary_search(&i).is_err();
                i += 1;
                keep
            });
            let yields = fit_sampled(estimator, &reduced, tenors)?;
            Ok((rmse(&yields, &base), max_abs_diff(&yields, &base)))
        })
        .collect();

    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for (c, &count) in counts.iter().enumerate() {
        let mut replications = Vec::new();
        let (mut rs, mut ms) = (Vec::new(), Vec::new());
        for r in 0..n_mc {
            let dropped_ids = sets[c][r].iter().map(|&i| snapshot.bonds[i].id.clone()).collect();
            let (rmse_curve, mad) = match outcomes.next().expect("one outcome per job") {
                Ok((x, m)) => {
                    rs.push(x);
                    ms.push(m);
                    (Some(x), Some(m))
                }
                Err(e) => {
                    failures.push(fail(format!("drop={count} mc={r}"), &e));
                    (None, None)
                }
            };
            replications.push(DropReplication {
                replication: r,
                dropped_ids,
                rmse_curve,
                mad,
            });
        }
        let (mean_rmse_curve, mean_mad) = (mean(&rs), mean(&ms));
        if let (Some(x), Some(m)) = (mean_rmse_curve, mean_mad) {
            metrics.push(full(format!("rmse_curve[drop={count}]"), x));
            metrics.push(full(format!("mad[drop={count}]"), m));
        }
        rows.push(DropRow {
            count,
            mean_rmse_curve,
            mean_mad,
            successes: rs.len(),
            failures: n_mc - rs.len(),
            replications,
        });
    }
    Ok(report(
        "drop",
        estimator,
        metrics,
        failures,
        Some(seed),
        json!({ "counts": counts, "n_mc": n_mc, "grid": tenors }),
        ExperimentDetail::Drop(DropDetail { rows }),
    ))
}

/// Tenors tracked through time by the stability experiment.
pub const FIXED_TENORS: [(&str, f64); 3] = [("6M", 0.5), ("2Y", 2.0), ("10Y", 10.0)];

/// Fits every day independently and measures how much the curve moves
/// between consecutive days, per maturity bucket.
pub fn stability_experiment(
    snapshots: &[MarketSnapshot],
    estimator: &dyn CurveEstimator,
    grid: &TenorGrid,
    buckets: &[Bucket],
    threshold: f64,
) -> Result<EvaluationReport> {
    if snapshots.len() < 2 {
        return Err(Error::Precondition("stability needs at least two days".into()));
    }
    if !(threshold >= 0.0) {
        return Err(Error::validation(None, "threshold", "must be non-negative"));
    }
    let tenors = grid.tenors();
    let fixed: Vec<f64> = FIXED_TENORS.iter().map(|&(_, t)| t).collect();
    let fits: Vec<Result<(Vec<f64>, Vec<f64>)>> = snapshots
        .par_iter()
        .map(|snap| {
            let curve = estimator.fit_curve(snap)?;
            Ok((sample_curve(curve.as_ref(), tenors)?, sample_curve(curve.as_ref(), &fixed)?))
        })
        .collect();

    let mut failures = Vec::new();
    let mut curves = Vec::new();
    let mut fixed_values = Vec::new();
    for (snap, fit) in snapshots.iter().zip(fits) {
        match fit {
            Ok((c, f)) => {
                curves.push(Some(c));
                fixed_values.push(Some(f));
            }
            Err(e) => {
                failures.push(fail(snap.date.clone(), &e));
                curves.push(None);
                fixed_values.push(None);
            }
        }
    }

    let mut pairs = Vec::new();
    let mut per_bucket: Vec<Vec<f64>> = vec![Vec::new(); buckets.len()];
    for i in 1..snapshots.len() {
        let (Some(prev), Some(cur)) = (&curves[i - 1], &curves[i]) else {
            continue;
        };
        let mut values = Vec::new();
        for (k, &bucket) in buckets.iter().enumerate() {
            if let Some(v) = bucket_rmse(cur, prev, grid, bucket) {
                per_bucket[k].push(v);
                values.push(BucketValue { bucket, value: v });
            }
        }
        pairs.push(StabilityPair {
            previous: snapshots[i - 1].date.clone(),
            date: snapshots[i].date.clone(),
            rmse_curve: values,
        });
    }

    let mut metrics = Vec::new();
    let mut hit_rates = Vec::new();
    for (k, &bucket) in buckets.iter().enumerate() {
        let series = &per_bucket[k];
        if series.is_empty() {
            continue;
        }
        let h = hit_rate(series, threshold);
        hit_rates.push(BucketValue { bucket, value: h });
        metrics.push(MetricRow {
            bucket,
            metric: "hit_rate".into(),
            value: h,
        });
        metrics.push(MetricRow {
            bucket,
            metric: "mean_rmse_curve".into(),
            value: mean(series).expect("non-empty"),
        });
    }

    let fixed_tenors = FIXED_TENORS
        .iter()
        .enumerate()
        .map(|(j, &(label, tenor))| TenorSeries {
            label: label.into(),
            tenor,
            fitted: fixed_values.iter().map(|f| f.as_ref().map(|v| v[j])).collect(),
            benchmark: snapshots.iter().map(|s| s.benchmark.rate_at(tenor)).collect(),
        })
        .collect();

    let detail = ExperimentDetail::Stability(StabilityDetail {
        threshold,
        grid: tenors.to_vec(),
        dates: snapshots.iter().map(|s| s.date.clone()).collect(),
        curves,
        pairs,
        hit_rates,
        fixed_tenors,
    });
    Ok(report(
        "stability",
        estimator,
        metrics,
        failures,
        None,
        json!({ "days": snapshots.len(), "threshold": threshold, "buckets": buckets, "grid": tenors }),
        detail,
    ))
}

/// Leave-one-out accuracy. Each column (Full plus the three maturity
/// buckets, or just `bucket_filter`) gets `n_mc` replications: a bond is
/// drawn uniformly from the column's bonds, the estimator is fitted on the
/// others, and the squared gap between the fitted yield and the held-out
/// YTM is recorded. Columns report the root of the mean.
pub fn loo_experiment(
    snapshot: &MarketSnapshot,
    estimator: &dyn CurveEstimator,
    n_mc: usize,
    bucket_filter: Option<Bucket>,
    seed: u64,
) -> Result<EvaluationReport> {
    if n_mc == 0 {
        return Err(Error::validation(None, "n_mc", "at least one replication required"));
    }
    let columns: Vec<Bucket> = match bucket_filter {
        Some(b) => vec![b],
        None => Bucket::ALL.to_vec(),
    };
    let candidates: Vec<Vec<usize>> = columns
        .iter()
        .map(|&b| (0..snapshot.bonds.len()).filter(|&i| b.contains(snapshot.bonds[i].maturity)).collect())
        .collect();
    for (b, c) in columns.iter().zip(&candidates) {
        if c.len() < 2 {
            return Err(Error::Precondition(format!(
                "leave-one-out needs at least 2 bonds in bucket {b}, found {}",
                c.len()
            )));
        }
    }

    let mut jobs = Vec::new();
    for (k, bucket) in Bucket::ALL.iter().enumerate() {
        let Some(col) = columns.iter().position(|b| b == bucket) else {
            continue;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for r in 0..n_mc {
            let pool = &candidates[col];
            jobs.push((col, r, pool[rng.random_range(0..pool.len())]));
        }
    }

    let outcomes: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(_, _, held)| {
            let bond = &snapshot.bonds[held];
            let ytm = yield_to_maturity(bond)?;
            let rest = snapshot.filtered(|b| b.id != bond.id);
            let curve = estimator.fit_curve(&rest)?;
            Ok((ytm, curve.yield_at(bond.maturity)?))
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut sums = vec![(0.0, 0usize); columns.len()];
    for (&(col, r, held), outcome) in jobs.iter().zip(outcomes) {
        let bond = &snapshot.bonds[held];
        match outcome {
            Ok((ytm, fitted)) => {
                let sq = (fitted - ytm) * (fitted - ytm);
                sums[col].0 += sq;
                sums[col].1 += 1;
                records.push(LooRecord {
                    bucket: columns[col],
                    replication: r,
                    bond_id: bond.id.clone(),
                    maturity: bond.maturity,
                    ytm,
                    fitted_yield: fitted,
                    squared_error: sq,
                });
            }
            Err(e) => failures.push(fail(format!("{} mc={r} bond={}", columns[col], bond.id), &e)),
        }
    }

    let mut metrics = Vec::new();
    let table: Vec<LooColumn> = columns
        .iter()
        .zip(&sums)
        .map(|(&bucket, &(sum, n))| {
            let value = (n > 0).then(|| (sum / n as f64).sqrt());
            if let Some(v) = value {
                metrics.push(MetricRow {
                    bucket,
                    metric: "rmse_ytm".into(),
                    value: v,
                });
            }
            LooColumn {
                bucket,
                rmse_ytm: value,
                successes: n,
                failures: n_mc - n,
            }
        })
        .collect();
    Ok(report(
        "loo",
        estimator,
        metrics,
        failures,
        Some(seed),
        json!({ "n_mc": n_mc, "bucket_filter": bucket_filter }),
        ExperimentDetail::Loo(LooDetail {
            columns: table,
            records,
        }),
    ))
}

/// Value lists swept by [`hyperparameter_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub learning_rates: Vec<f64>,
    pub epochs: Vec<usize>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
}

/// In-sample RMSE_ytm of the network over every combination in `sweep`,
/// other settings taken from `base`.
///
/// Training is deterministic, so for each (learning rate, gamma1, gamma2)
/// the network is trained once up to the largest epoch count and read off
/// at the smaller ones on the way.
pub fn hyperparameter_scan(
    snapshot: &MarketSnapshot,
    base: &TrainConfig,
    sweep: &HyperGrid,
) -> Result<EvaluationReport> {
    if sweep.learning_rates.is_empty() || sweep.epochs.is_empty() || sweep.gamma1.is_empty() || sweep.gamma2.is_empty()
    {
        return Err(Error::validation(None, "hyperscan", "every sweep list must be non-empty"));
    }
    if sweep.epochs.contains(&0) {
        return Err(Error::validation(None, "epochs", "epoch counts must be positive"));
    }
    snapshot.validate()?;
    let mut epochs = sweep.epochs.clone();
    epochs.sort_unstable();
    epochs.dedup();

    let mut combos = Vec::new();
    for &lr in &sweep.learning_rates {
        for &g1 in &sweep.gamma1 {
            for &g2 in &sweep.gamma2 {
                combos.push((lr, g1, g2));
            }
        }
    }
    // One entry per (combo, epoch count in ascending order).
    let results: Vec<Vec<Result<f64>>> = combos
        .par_iter()
        .map(|&(lr, g1, g2)| {
            let config = TrainConfig {
                learning_rate: lr,
                gamma1: g1,
                gamma2: g2,
                ..base.clone()
            };
            let mut params = init_params(snapshot, &config);
            let mut done = 0;
            let mut out = Vec::new();
            let mut broken: Option<Error> = None;
            for &e in &epochs {
                if let Some(err) = &broken {
                    out.push(Err(Error::FitFailure(err.to_string())));
                    continue;
                }
                let step = TrainConfig {
                    epochs: e - done,
                    ..config.clone()
                };
                let result = train_from(snapshot, &step, &mut params).and_then(|_| super::rmse_ytm(&params, snapshot));
                if let Err(err) = &result {
                    broken = Some(Error::FitFailure(err.to_string()));
                }
                out.push(result);
                done = e;
            }
            out
        })
        .collect();

    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    for (&(lr, g1, g2), per_epoch) in combos.iter().zip(results) {
        for (&e, result) in epochs.iter().zip(per_epoch) {
            let key = format!("lr={lr:e},epochs={e},gamma1={g1:e},gamma2={g2:e}");
            let rmse_ytm = match result {
                Ok(v) => {
                    metrics.push(full(format!("rmse_ytm[{key}]"), v));
                    Some(v)
                }
                Err(err) => {
                    failures.push(fail(key, &err));
                    None
                }
            };
            rows.push(HyperscanRow {
                learning_rate: lr,
                epochs: e,
                gamma1: g1,
                gamma2: g2,
                rmse_ytm,
            });
        }
    }
    let estimator = crate::estimator::Estimator::Nn(base.clone());
    Ok(report(
        "hyperscan",
        &estimator,
        metrics,
        failures,
        Some(base.seed),
        serde_json::to_value(sweep).unwrap_or_default(),
        ExperimentDetail::Hyperscan(HyperscanDetail { rows }),
    ))
}
