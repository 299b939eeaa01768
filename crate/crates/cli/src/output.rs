use std::fs;
use std::path::{Path, PathBuf};

use curvekit_core::evaluation::{write_reports_csv, EvaluationReport, Metadata};
use curvekit_core::market::{load_snapshot, SnapshotFormat};
use curvekit_core::{BenchmarkCurve, Error, MarketSnapshot, Result, YieldCurve};
use serde::Serialize;

use crate::args::Format;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_err(dir)),
        _ => Ok(()),
    }
}

pub fn format_for(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or(match SnapshotFormat::from_path(path) {
        Some(SnapshotFormat::Csv) => Format::Csv,
        _ => Format::Json,
    })
}

pub fn snapshot_format(format: Format) -> SnapshotFormat {
    match format {
        Format::Json => SnapshotFormat::Json,
        Format::Csv => SnapshotFormat::Csv,
    }
}

pub fn read_snapshot(path: &Path) -> Result<MarketSnapshot> {
    let format = SnapshotFormat::from_path(path).unwrap_or(SnapshotFormat::Json);
    load_snapshot(path, format)
}

/// Snapshot files in a directory, in file-name order. Benchmark companion
/// files are skipped.
pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            SnapshotFormat::from_path(p).is_some() && !name.ends_with(".benchmark.csv")
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Domain(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[derive(Serialize)]
struct CurvePoint {
    tenor: f64,
    #[serde(rename = "yield")]
    yield_: f64,
    benchmark_yield: f64,
}

/// Writes `(tenor, yield, benchmark_yield)` for every tenor.
pub fn write_curve(
    curve: &dyn YieldCurve,
    benchmark: &BenchmarkCurve,
    tenors: &[f64],
    path: &Path,
    format: Format,
) -> Result<()> {
    let points = tenors
        .iter()
        .map(|&t| {
            Ok(CurvePoint {
                tenor: t,
                yield_: curve.yield_at(t)?,
                benchmark_yield: benchmark.rate_at(t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match format {
        Format::Json => write_json(&points, path),
        Format::Csv => {
            ensure_parent(path)?;
            let file = fs::File::create(path).map_err(io_err(path))?;
            let mut out = csv::Writer::from_writer(file);
            for p in &points {
                out.serialize(p).map_err(|e| Error::Domain(e.to_string()))?;
            }
            out.flush().map_err(io_err(path))
        }
    }
}

pub fn write_reports(reports: &mut [EvaluationReport], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            for r in reports.iter_mut() {
                r.metadata = Some(Metadata {
                    generated_at: stamp.clone(),
                });
            }
            write_json(&reports, path)
        }
        Format::Csv => {
            ensure_parent(path)?;
            let file = fs::File::create(path).map_err(io_err(path))?;
            write_reports_csv(reports, file)
        }
    }
}

pub fn bp(x: f64) -> String {
    format!("{:.2}", x * 1e4)
}

pub fn opt_bp(x: Option<f64>) -> String {
    x.map(bp).unwrap_or_else(|| "-".into())
}
