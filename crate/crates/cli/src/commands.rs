use std::path::{Path, PathBuf};
use std::process::ExitCode;

use curvekit_core::evaluation::{
    drop_bonds_experiment, hyperparameter_scan, loo_experiment, perturb_price_experiment, rmse_ytm,
    stability_experiment, EvaluationReport, ExperimentDetail, HyperGrid,
};
use curvekit_core::market::{generate_daily_series, generate_scenario, save_snapshot};
use curvekit_core::{Bucket, Error, Estimator, MarketSnapshot, Result, ScenarioSpec, TenorGrid};

use crate::args::*;
use crate::config::{apply_shape, resolve, FitConfig, Resolved};
use crate::output::*;

pub fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let spec = ScenarioSpec {
        regime: args.regime.into(),
        n_bonds: args.bonds,
        maturity_range: [args.min_maturity, args.max_maturity],
        coupon_range: [args.min_coupon, args.max_coupon],
        spread_over_benchmark: args.spread,
        price_noise_sd: args.noise,
        benchmark_level: args.level,
        seed: args.seed,
    };
    match args.days {
        None => {
            let snapshot = generate_scenario(&spec)?;
            let format = format_for(&args.output, args.format);
            ensure_parent(&args.output)?;
            save_snapshot(&snapshot, &args.output, snapshot_format(format))?;
            println!("wrote {} bonds to {}", snapshot.bonds.len(), args.output.display());
            print_benchmark(&snapshot);
        }
        Some(days) => {
            let series = generate_daily_series(&spec, days, args.drift)?;
            let format = args.format.unwrap_or(Format::Json);
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            std::fs::create_dir_all(&args.output).map_err(io_err(&args.output))?;
            for snapshot in &series {
                let path = args.output.join(format!("{}.{ext}", snapshot.date));
                save_snapshot(snapshot, &path, snapshot_format(format))?;
            }
            println!("wrote {} days to {}", series.len(), args.output.display());
            if let Some(first) = series.first() {
                print_benchmark(first);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_benchmark(snapshot: &MarketSnapshot) {
    let b = &snapshot.benchmark;
    let (Some(t0), Some(r0), Some(t1), Some(r1)) = (b.tenors.first(), b.rates.first(), b.tenors.last(), b.rates.last())
    else {
        return;
    };
    println!(
        "benchmark: {} tenors, {:.4}% at {t0:.3}Y to {:.4}% at {t1:.0}Y",
        b.tenors.len(),
        r0 * 100.0,
        r1 * 100.0
    );
}

pub fn fit(args: FitArgs) -> Result<ExitCode> {
    let resolved = resolve(&args.model)?;
    let name = args
        .estimator
        .clone()
        .or_else(|| resolved.config.estimator.clone())
        .unwrap_or_else(|| "kr".into());
    let estimator = resolved.estimator(&name)?;
    let snapshot = read_snapshot(&args.snapshot)?;
    let model = estimator.fit(&snapshot)?;

    let dir = args
        .out_dir
        .clone()
        .or_else(|| args.snapshot.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let stem = args.snapshot.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    let label = estimator.label();
    let ext = match args.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let model_path = dir.join(format!("{stem}.{label}.model.json"));
    let grid_path = dir.join(format!("{stem}.{label}.grid.{ext}"));
    let dense_path = dir.join(format!("{stem}.{label}.dense.{ext}"));

    let mut json = model.model_json().map_err(|e| Error::Domain(e.to_string()))?;
    json.push('\n');
    ensure_parent(&model_path)?;
    std::fs::write(&model_path, json).map_err(io_err(&model_path))?;
    write_curve(&model, &snapshot.benchmark, resolved.grid.tenors(), &grid_path, args.format)?;
    let dense = TenorGrid::dense(0.1, 30.0)?;
    write_curve(&model, &snapshot.benchmark, dense.tenors(), &dense_path, args.format)?;

    println!("estimator: {label}");
    println!("bonds: {}", snapshot.bonds.len());
    match rmse_ytm(&model, &snapshot) {
        Ok(v) => println!("RMSE_ytm: {v:.10} ({} bp)", bp(v)),
        Err(e) => eprintln!("RMSE_ytm unavailable: {e}"),
    }
    println!("model: {}", model_path.display());
    println!("curve: {}", grid_path.display());
    println!("dense curve: {}", dense_path.display());
    Ok(ExitCode::SUCCESS)
}

fn estimators(args: &EstimatorsArgs) -> Result<(Resolved, Vec<Estimator>)> {
    let resolved = resolve(&args.model)?;
    let list = args
        .estimators
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|name| resolved.estimator(name))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(Error::Validation {
            bond_id: None,
            field: "estimators".into(),
            message: "at least one estimator required".into(),
        });
    }
    Ok((resolved, list))
}

fn finish(mut reports: Vec<EvaluationReport>, report: &ReportArgs) -> Result<ExitCode> {
    let format = format_for(&report.output, report.format);
    write_reports(&mut reports, &report.output, format)?;
    println!("report: {}", report.output.display());
    let failures: usize = reports.iter().map(|r| r.failure_count).sum();
    if failures == 0 {
        return Ok(ExitCode::SUCCESS);
    }
    for r in &reports {
        for f in &r.failures {
            eprintln!("{} failed ({}): {}", r.estimator, f.context, f.message);
        }
    }
    eprintln!("{failures} fit(s) failed; see the report for per-replication counts");
    Ok(ExitCode::from(4))
}

pub fn experiment(cmd: ExperimentCommand) -> Result<ExitCode> {
    match cmd {
        ExperimentCommand::Perturb(a) => perturb(a),
        ExperimentCommand::Drop(a) => drop_bonds(a),
        ExperimentCommand::Stability(a) => stability(a),
        ExperimentCommand::Loo(a) => loo(a),
        ExperimentCommand::Hyperscan(a) => hyperscan(a),
    }
}

fn perturb(args: PerturbArgs) -> Result<ExitCode> {
    let (resolved, list) = estimators(&args.estimators)?;
    let snapshot = read_snapshot(&args.snapshot)?;
    let bond_id = match &args.bond {
        Some(id) => id.clone(),
        None => {
            let order = snapshot.maturity_order();
            snapshot.bonds[*order.last().expect("validated snapshot has bonds")].id.clone()
        }
    };
    println!("perturbing {bond_id}");
    println!("{:<10} {:>8} {:>16} {:>10}", "estimator", "bump", "RMSE_curve(bp)", "MAD(bp)");
    let mut reports = Vec::new();
    for est in &list {
        let report = perturb_price_experiment(&snapshot, est, &bond_id, &args.bumps, &resolved.grid)?;
        if let ExperimentDetail::Perturb(d) = &report.detail {
            for row in &d.rows {
                println!(
                    "{:<10} {:>8} {:>16} {:>10}",
                    report.estimator,
                    row.bump,
                    opt_bp(row.rmse_curve),
                    opt_bp(row.mad)
                );
            }
        }
        reports.push(report);
    }
    finish(reports, &args.report)
}

fn experiment_seed(model: &crate::args::ModelArgs) -> u64 {
    model.seed.unwrap_or(0)
}

fn drop_bonds(args: DropArgs) -> Result<ExitCode> {
    let (resolved, list) = estimators(&args.estimators)?;
    let snapshot = read_snapshot(&args.snapshot)?;
    let seed = experiment_seed(&args.estimators.model);
    println!(
        "{:<10} {:>6} {:>16} {:>10} {:>9}",
        "estimator", "count", "RMSE_curve(bp)", "MAD(bp)", "failures"
    );
    let mut reports = Vec::new();
    for est in &list {
        let report = drop_bonds_experiment(&snapshot, est, &args.counts, args.mc, seed, &resolved.grid)?;
        if let ExperimentDetail::Drop(d) = &report.detail {
            for row in &d.rows {
                println!(
                    "{:<10} {:>6} {:>16} {:>10} {:>9}",
                    report.estimator,
                    row.count,
                    opt_bp(row.mean_rmse_curve),
                    opt_bp(row.mean_mad),
                    row.failures
                );
            }
        }
        reports.push(report);
    }
    finish(reports, &args.report)
}

fn stability(args: StabilityArgs) -> Result<ExitCode> {
    let (resolved, list) = estimators(&args.estimators)?;
    let files: Vec<PathBuf> = if args.inputs.len() == 1 && args.inputs[0].is_dir() {
        snapshot_files(&args.inputs[0])?
    } else {
        args.inputs.clone()
    };
    let snapshots = files.iter().map(|p| read_snapshot(p)).collect::<Result<Vec<_>>>()?;
    println!("{} days", snapshots.len());
    println!("{:<10} {:>8} {:>10} {:>16}", "estimator", "bucket", "hit_rate", "RMSE_curve(bp)");
    let mut reports = Vec::new();
    for est in &list {
        let report = stability_experiment(&snapshots, est, &resolved.grid, &Bucket::ALL, args.threshold)?;
        for bucket in Bucket::ALL {
            if let Some(h) = report.metric(bucket, "hit_rate") {
                println!(
                    "{:<10} {:>8} {:>10.3} {:>16}",
                    report.estimator,
                    bucket.label(),
                    h,
                    opt_bp(report.metric(bucket, "mean_rmse_curve"))
                );
            }
        }
        reports.push(report);
    }
    finish(reports, &args.report)
}

fn loo(args: LooArgs) -> Result<ExitCode> {
    let (_, list) = estimators(&args.estimators)?;
    let snapshot = read_snapshot(&args.snapshot)?;
    let bucket = args
        .bucket
        .as_deref()
        .map(|b| {
            Bucket::parse(b).ok_or_else(|| Error::Validation {
                bond_id: None,
                field: "bucket".into(),
                message: format!("unknown bucket '{b}'"),
            })
        })
        .transpose()?;
    let seed = experiment_seed(&args.estimators.model);
    let columns: Vec<Bucket> = bucket.map(|b| vec![b]).unwrap_or_else(|| Bucket::ALL.to_vec());
    print!("{:<10}", "RMSE_ytm(bp)");
    for b in &columns {
        print!(" {:>8}", b.label());
    }
    println!();
    let mut reports = Vec::new();
    for est in &list {
        let report = loo_experiment(&snapshot, est, args.mc, bucket, seed)?;
        print!("{:<10}", report.estimator);
        for b in &columns {
            print!(" {:>8}", opt_bp(report.metric(*b, "rmse_ytm")));
        }
        println!();
        reports.push(report);
    }
    finish(reports, &args.report)
}

fn hyperscan(args: HyperscanArgs) -> Result<ExitCode> {
    let mut base = FitConfig::load(args.config.as_deref())?.nn;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    apply_shape(&mut base, &args.shape);
    base.validate()?;
    let snapshot = read_snapshot(&args.snapshot)?;
    let sweep = HyperGrid {
        learning_rates: args.lr.clone(),
        epochs: args.epochs.clone(),
        gamma1: args.gamma1.clone(),
        gamma2: args.gamma2.clone(),
    };
    let report = hyperparameter_scan(&snapshot, &base, &sweep)?;
    if let ExperimentDetail::Hyperscan(d) = &report.detail {
        for &g1 in &sweep.gamma1 {
            for &g2 in &sweep.gamma2 {
                println!("RMSE_ytm (bp), gamma1={g1:e}, gamma2={g2:e}");
                print!("{:>8}", "epochs");
                for lr in &sweep.learning_rates {
                    print!(" {:>10}", format!("LR={lr:e}"));
                }
                println!();
                let mut epochs = sweep.epochs.clone();
                epochs.sort_unstable();
                epochs.dedup();
                for e in epochs {
                    print!("{e:>8}");
                    for &lr in &sweep.learning_rates {
                        let cell = d
                            .rows
                            .iter()
                            .find(|r| r.learning_rate == lr && r.epochs == e && r.gamma1 == g1 && r.gamma2 == g2)
                            .and_then(|r| r.rmse_ytm);
                        print!(" {:>10}", opt_bp(cell));
                    }
                    println!();
                }
            }
        }
    }
    finish(vec![report], &args.report)
}
