use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BenchmarkCurve, Bond, Cashflow, MarketSnapshot};
use crate::error::{Error, Result};
use crate::grid::TenorGrid;
use crate::pricing::{present_value, SpreadCurve};

const FACE_VALUE: f64 = 100.0;
const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Flat,
    Rising,
    Falling,
}

impl Regime {
    /// Benchmark yield for level `c`: flat `c`, rising `c(1 - e^{-t/4}/2)`,
    /// falling `c(1 + e^{-t/4}/2)`.
    pub fn rate(self, level: f64, t: f64) -> f64 {
        let hump = 0.5 * (-t / 4.0).exp();
        match self {
            Regime::Flat => level,
            Regime::Rising => level * (1.0 - hump),
            Regime::Falling => level * (1.0 + hump),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(Regime::Flat),
            "rising" => Ok(Regime::Rising),
            "falling" => Ok(Regime::Falling),
            other => Err(Error::validation(None, "regime", format!("unknown regime {other:?}"))),
        }
    }
}

/// Recipe for a synthetic market: benchmark shape, bond universe, pricing
/// spread and quote noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub regime: Regime,
    pub n_bonds: usize,
    /// `[min_years, max_years]`
    pub maturity_range: [f64; 2],
    /// `[min_rate, max_rate]`, annual coupon as a fraction of face value.
    pub coupon_range: [f64; 2],
    pub spread_over_benchmark: f64,
    /// Standard deviation of the multiplicative price shock.
    pub price_noise_sd: f64,
    /// Long-run benchmark level `c`.
    pub benchmark_level: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            regime: Regime::Flat,
            n_bonds: 60,
            maturity_range: [0.05, 15.0],
            coupon_range: [0.01, 0.05],
            spread_over_benchmark: 0.005,
            price_noise_sd: 0.0,
            benchmark_level: 0.03,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_bonds < 2 {
            return Err(Error::validation(None, "n_bonds", format!("n_bonds >= 2 required, got {}", self.n_bonds)));
        }
        let [lo, hi] = self.maturity_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::validation(None, "maturity_range", "need 0 < min < max"));
        }
        let [clo, chi] = self.coupon_range;
        if !(clo >= 0.0 && chi >= clo && chi.is_finite()) {
            return Err(Error::validation(None, "coupon_range", "need 0 <= min <= max"));
        }
        if !(self.price_noise_sd >= 0.0 && self.price_noise_sd < 0.2) {
            return Err(Error::validation(None, "price_noise_sd", "need 0 <= sd < 0.2"));
        }
        if !self.spread_over_benchmark.is_finite() || !self.benchmark_level.is_finite() {
            return Err(Error::validation(None, "spread_over_benchmark", "must be finite"));
        }
        Ok(())
    }

    fn benchmark_at_level(&self, level: f64) -> BenchmarkCurve {
        let tenors = TenorGrid::standard().tenors().to_vec();
        let rates = tenors.iter().map(|&t| self.regime.rate(level, t)).collect();
        BenchmarkCurve { tenors, rates }
    }

    pub fn benchmark(&self) -> BenchmarkCurve {
        self.benchmark_at_level(self.benchmark_level)
    }
}

/// Curve the synthetic prices are generated from: benchmark plus spread.
pub fn generating_curve(spec: &ScenarioSpec) -> SpreadCurve<BenchmarkCurve> {
    SpreadCurve::new(spec.benchmark(), spec.spread_over_benchmark)
}

/// Coupon schedule with annual payments counted back from maturity.
fn annual_schedule(maturity: f64, coupon_rate: f64) -> Vec<Cashflow> {
    if coupon_rate <= 0.0 {
        return Vec::new();
    }
    let amount = coupon_rate * FACE_VALUE;
    let mut flows: Vec<Cashflow> = (0..)
        .map(|k| maturity - k as f64)
        .take_while(|&t| t > 1e-9)
        .map(|time| Cashflow { time, amount })
        .collect();
    flows.reverse();
    flows
}

struct BondTemplate {
    maturity: f64,
    coupon_rate: f64,
}

fn draw_templates(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<BondTemplate> {
    let [lo, hi] = spec.maturity_range;
    let [clo, chi] = spec.coupon_range;
    let mut templates: Vec<BondTemplate> = (0..spec.n_bonds)
        .map(|_| {
            // squared uniform concentrates maturities at the short end
            let u: f64 = rng.random();
            let c: f64 = rng.random();
            BondTemplate {
                maturity: lo + (hi - lo) * u * u,
                coupon_rate: clo + (chi - clo) * c,
            }
        })
        .collect();
    templates.sort_by(|a, b| a.maturity.total_cmp(&b.maturity));
    templates
}

fn bond_id(i: usize) -> String {
    format!("B{:03}", i + 1)
}

fn noise_factor(sd: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sd == 0.0 {
        return 1.0;
    }
    let normal = Normal::new(0.0, sd).expect("sd validated");
    1.0 + normal.sample(rng)
}

fn price_bonds(
    date: String,
    shells: Vec<Bond>,
    benchmark: BenchmarkCurve,
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<MarketSnapshot> {
    let curve = SpreadCurve::new(benchmark.clone(), spec.spread_over_benchmark);
    let mut bonds = Vec::with_capacity(shells.len());
    for shell in shells {
        let clean = present_value(&curve, &shell)?;
        let price = clean * noise_factor(spec.price_noise_sd, rng);
        bonds.push(shell.with_price(price));
    }
    MarketSnapshot::new(date, bonds, benchmark)
}

/// Builds one synthetic market day. Deterministic in `spec.seed`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<MarketSnapshot> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shells = draw_templates(spec, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(i, t)| Bond {
            id: bond_id(i),
            face_value: FACE_VALUE,
            maturity: t.maturity,
            market_price: 1.0,
            cashflows: annual_schedule(t.maturity, t.coupon_rate),
        })
        .collect();
    price_bonds(format!("{:?}-{}", spec.regime, spec.seed).to_lowercase(), shells, spec.benchmark(), spec, &mut rng)
}

/// A run of consecutive market days over the same bond universe.
///
/// Each day the valuation date advances by one calendar day (all cashflow
/// times shrink by 1/365), the benchmark level follows a Gaussian random
/// walk with daily step `level_drift_sd`, and fresh quote noise is drawn.
/// Bonds whose maturity has passed are dropped.
pub fn generate_daily_series(spec: &ScenarioSpec, days: usize, level_drift_sd: f64) -> Result<Vec<MarketSnapshot>> {
    spec.validate()?;
    if days == 0 {
        return Err(Error::validation(None, "days", "at least one day required"));
    }
    if !(level_drift_sd >= 0.0 && level_drift_sd.is_finite()) {
        return Err(Error::validation(None, "level_drift_sd", "must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let templates = draw_templates(spec, &mut rng);
    let drift = Normal::new(0.0, level_drift_sd).expect("validated");

    let mut level = spec.benchmark_level;
    let mut out = Vec::with_capacity(days);
    for day in 0..days {
        if day > 0 && level_drift_sd > 0.0 {
            level += drift.sample(&mut rng);
        }
        let elapsed = day as f64 / DAYS_PER_YEAR;
        let shells: Vec<Bond> = templates
            .iter()
            .enumerate()
            .filter(|(_, t)| t.maturity - elapsed > 1e-9)
            .map(|(i, t)| {
                let cashflows = annual_schedule(t.maturity, t.coupon_rate)
                    .into_iter()
                    .filter(|cf| cf.time - elapsed > 1e-9)
                    .map(|cf| Cashflow {
                        time: cf.time - elapsed,
                        amount: cf.amount,
                    })
                    .collect();
                Bond {
                    id: bond_id(i),
                    face_value: FACE_VALUE,
                    maturity: t.maturity - elapsed,
                    market_price: 1.0,
                    cashflows,
                }
            })
            .collect();
        let benchmark = spec.benchmark_at_level(level);
        out.push(price_bonds(format!("day-{:03}", day + 1), shells, benchmark, spec, &mut rng)?);
    }
    Ok(out)
}
