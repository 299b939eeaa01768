use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BenchmarkCurve, Bond, Cashflow, MarketSnapshot};
use crate::error::{Error, Result};

const BOND_HEADER: [&str; 5] = ["id", "face_value", "maturity", "market_price", "cashflows"];
const BENCHMARK_HEADER: [&str; 2] = ["tenor", "rate"];
const DATE_PREFIX: &str = "# date:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Json,
    Csv,
}

impl SnapshotFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

impl FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::validation(None, "format", format!("unknown format {other:?}"))),
        }
    }
}

/// `<dir>/<stem>.benchmark.csv` for a bond file `<dir>/<stem>.csv`.
pub fn benchmark_companion_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    path.with_file_name(format!("{stem}.benchmark.csv"))
}

pub fn load_snapshot(path: &Path, format: SnapshotFormat) -> Result<MarketSnapshot> {
    let snapshot = match format {
        SnapshotFormat::Json => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<MarketSnapshot>(&text).map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: e.to_string(),
            })?
        }
        SnapshotFormat::Csv => load_csv(path)?,
    };
    snapshot.validate()?;
    Ok(snapshot)
}

pub fn save_snapshot(snapshot: &MarketSnapshot, path: &Path, format: SnapshotFormat) -> Result<()> {
    match format {
        SnapshotFormat::Json => {
            let mut text = serde_json::to_string_pretty(snapshot).map_err(|e| Error::Parse {
                context: "snapshot serialization".into(),
                message: e.to_string(),
            })?;
            text.push('\n');
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        SnapshotFormat::Csv => save_csv(snapshot, path),
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        context: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_f64(path: &Path, row: &str, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, format!("row {row}: field {field}: not a number: {raw:?}")))
}

fn format_cashflows(cashflows: &[Cashflow]) -> String {
    cashflows
        .iter()
        .map(|cf| format!("{}:{}", cf.time, cf.amount))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_cashflows(path: &Path, id: &str, cell: &str) -> Result<Vec<Cashflow>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';')
        .map(|item| {
            let (t, a) = item
                .split_once(':')
                .ok_or_else(|| parse_err(path, format!("bond {id}: cashflow {item:?} is not time:amount")))?;
            Ok(Cashflow {
                time: parse_f64(path, id, "cashflows.time", t)?,
                amount: parse_f64(path, id, "cashflows.amount", a)?,
            })
        })
        .collect()
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != expected {
        return Err(parse_err(path, format!("expected header {expected:?}, found {found:?}")));
    }
    Ok(())
}

fn load_csv(path: &Path) -> Result<MarketSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let date = text
        .lines()
        .next()
        .and_then(|line| line.strip_prefix(DATE_PREFIX))
        .map(|d| d.trim().to_owned())
        .unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned());

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    check_header(path, reader.headers().map_err(|e| parse_err(path, e.to_string()))?, &BOND_HEADER)?;
    let mut bonds = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.len() != BOND_HEADER.len() {
            return Err(parse_err(path, format!("row {}: expected 5 fields", line + 1)));
        }
        let id = record[0].trim().to_owned();
        bonds.push(Bond {
            face_value: parse_f64(path, &id, "face_value", &record[1])?,
            maturity: parse_f64(path, &id, "maturity", &record[2])?,
            market_price: parse_f64(path, &id, "market_price", &record[3])?,
            cashflows: parse_cashflows(path, &id, &record[4])?,
            id,
        });
    }

    let bench_path = benchmark_companion_path(path);
    let bench_text = fs::read_to_string(&bench_path).map_err(|e| Error::io(&bench_path, e))?;
    let mut reader = csv::Reader::from_reader(bench_text.as_bytes());
    check_header(
        &bench_path,
        reader.headers().map_err(|e| parse_err(&bench_path, e.to_string()))?,
        &BENCHMARK_HEADER,
    )?;
    let (mut tenors, mut rates) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(&bench_path, e.to_string()))?;
        let row = (line + 1).to_string();
        if record.len() != 2 {
            return Err(parse_err(&bench_path, format!("row {row}: expected 2 fields")));
        }
        tenors.push(parse_f64(&bench_path, &row, "tenor", &record[0])?);
        rates.push(parse_f64(&bench_path, &row, "rate", &record[1])?);
    }

    Ok(MarketSnapshot {
        date,
        benchmark: BenchmarkCurve { tenors, rates },
        bonds,
    })
}

fn save_csv(snapshot: &MarketSnapshot, path: &Path) -> Result<()> {
    let csv_err = |p: &Path, e: csv::Error| Error::io(p, std::io::Error::other(e.to_string()));

    let mut buf = format!("{DATE_PREFIX} {}\n", snapshot.date).into_bytes();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        writer.write_record(BOND_HEADER).map_err(|e| csv_err(path, e))?;
        for bond in &snapshot.bonds {
            writer
                .write_record([
                    bond.id.clone(),
                    bond.face_value.to_string(),
                    bond.maturity.to_string(),
                    bond.market_price.to_string(),
                    format_cashflows(&bond.cashflows),
                ])
                .map_err(|e| csv_err(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))?;

    let bench_path = benchmark_companion_path(path);
    let mut writer = csv::Writer::from_path(&bench_path).map_err(|e| csv_err(&bench_path, e))?;
    writer.write_record(BENCHMARK_HEADER).map_err(|e| csv_err(&bench_path, e))?;
    for (t, r) in snapshot.benchmark.tenors.iter().zip(&snapshot.benchmark.rates) {
        writer
            .write_record([t.to_string(), r.to_string()])
            .map_err(|e| csv_err(&bench_path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&bench_path, e))
}
