//! Fixed maturity grid used for curve comparisons and the maturity buckets
//! reported alongside every metric.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DAY: f64 = 1.0 / 365.0;
const MONTH: f64 = 1.0 / 12.0;

/// Ordered set of tenors (years) on which curves are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TenorGrid {
    tenors: Vec<f64>,
}

impl TenorGrid {
    /// 1D, 1W, 2W, 1M, 2M, 3M, 6M, 9M, 12M, 15M, 18M, 21M, 2Y..10Y, 12Y, 15Y,
    /// 20Y, 25Y, 30Y.
    pub fn standard() -> Self {
        let mut tenors = vec![DAY, 7.0 * DAY, 14.0 * DAY];
        for months in [1.0, 2.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0] {
            tenors.push(months * MONTH);
        }
        for years in [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0] {
            tenors.push(years);
        }
        Self { tenors }
    }

    pub fn new(tenors: Vec<f64>) -> Result<Self> {
        if tenors.len() < 2 {
            return Err(Error::validation(None, "grid", "at least two tenors required"));
        }
        if tenors.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::validation(None, "grid", "tenors must be finite and positive"));
        }
        if tenors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(None, "grid", "tenors must be strictly increasing"));
        }
        Ok(Self { tenors })
    }

    /// Evenly spaced tenors `step, 2*step, ...` up to and including `max`.
    pub fn dense(step: f64, max: f64) -> Result<Self> {
        if !(step > 0.0) || !(max > step) {
            return Err(Error::validation(None, "grid", "dense grid needs 0 < step < max"));
        }
        let n = (max / step + 1e-9).floor() as usize;
        Self::new((1..=n).map(|i| i as f64 * step).collect())
    }

    pub fn tenors(&self) -> &[f64] {
        &self.tenors
    }

    pub fn len(&self) -> usize {
        self.tenors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tenors.is_empty()
    }

    /// Indices of the grid points falling in `bucket`.
    pub fn bucket_indices(&self, bucket: Bucket) -> Vec<usize> {
        self.tenors
            .iter()
            .enumerate()
            .filter(|(_, t)| bucket.contains(**t))
            .map(|(i, _)| i)
            .collect()
    }
}

impl Default for TenorGrid {
    fn default() -> Self {
        Self::standard()
    }
}

impl TryFrom<Vec<f64>> for TenorGrid {
    type Error = Error;

    fn try_from(tenors: Vec<f64>) -> Result<Self> {
        Self::new(tenors)
    }
}

impl From<TenorGrid> for Vec<f64> {
    fn from(grid: TenorGrid) -> Self {
        grid.tenors
    }
}

/// Maturity bucket. `Short` is strictly below 2Y, `Medium` spans 2Y to 10Y
/// inclusive, `Long` is strictly above 10Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "Full")]
    Full,
    #[serde(rename = "<2Y")]
    Short,
    #[serde(rename = "2Y-10Y")]
    Medium,
    #[serde(rename = ">10Y")]
    Long,
}

impl Bucket {
    /// Table layout order.
    pub const ALL: [Bucket; 4] = [Bucket::Full, Bucket::Short, Bucket::Medium, Bucket::Long];
    pub const PARTS: [Bucket; 3] = [Bucket::Short, Bucket::Medium, Bucket::Long];

    pub fn of(t: f64) -> Bucket {
        if t < 2.0 {
            Bucket::Short
        } else if t <= 10.0 {
            Bucket::Medium
        } else {
            Bucket::Long
        }
    }

    pub fn contains(self, t: f64) -> bool {
        self == Bucket::Full || Bucket::of(t) == self
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Full => "Full",
            Bucket::Short => "<2Y",
            Bucket::Medium => "2Y-10Y",
            Bucket::Long => ">10Y",
        }
    }

    pub fn parse(s: &str) -> Option<Bucket> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Some(Bucket::Full),
            "<2y" | "short" => Some(Bucket::Short),
            "2y-10y" | "medium" => Some(Bucket::Medium),
            ">10y" | "long" => Some(Bucket::Long),
            _ => None,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
