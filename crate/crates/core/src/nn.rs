//! Shallow neural-network yield curve.
//!
//! The curve is `y(t) = sum_i v_i tanh(w_i t + b_i) + c`, trained on one day
//! of bond prices with the composite loss
//!
//! ```text
//! L = L_error + gamma1 L_smooth + gamma2 L_trend
//! ```
//!
//! where `L_error` is the mean squared price error, `L_smooth` the largest
//! absolute slope of the curve between adjacent grid tenors, and `L_trend`
//! the mean absolute mismatch between curve and benchmark slopes on the same
//! grid. Gradients are exact backpropagation through pricing, discounting
//! and the network; the max in `L_smooth` passes its subgradient through the
//! single steepest pair (lowest index on ties).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TenorGrid;
use crate::market::{BenchmarkCurve, Bond, MarketSnapshot};
use crate::pricing::{yield_to_maturity, YieldCurve};

/// Network weights. Also used as the container for gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl NnParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            w: vec![0.0; hidden],
            b: vec![0.0; hidden],
            v: vec![0.0; hidden],
            c: 0.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w.len();
        if h == 0 || self.b.len() != h || self.v.len() != h {
            return Err(Error::validation(None, "nn", "w, b, v must share a non-zero length"));
        }
        if !self.iter().all(f64::is_finite) {
            return Err(Error::validation(None, "nn", "parameters must be finite"));
        }
        Ok(())
    }

    /// Parameters in the order `w, b, v, c`.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w
            .iter()
            .chain(&self.b)
            .chain(&self.v)
            .copied()
            .chain(std::iter::once(self.c))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 3 * hidden + 1 {
            return Err(Error::validation(None, "nn", "flat parameter length must be 3H + 1"));
        }
        Ok(Self {
            w: flat[..hidden].to_vec(),
            b: flat[hidden..2 * hidden].to_vec(),
            v: flat[2 * hidden..3 * hidden].to_vec(),
            c: flat[3 * hidden],
        })
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &NnParams) {
        for (x, y) in self.w.iter_mut().zip(&other.w) {
            *x += alpha * y;
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x += alpha * y;
        }
        for (x, y) in self.v.iter_mut().zip(&other.v) {
            *x += alpha * y;
        }
        self.c += alpha * other.c;
    }

    fn scale(&mut self, alpha: f64) {
        self.w.iter_mut().chain(&mut self.b).chain(&mut self.v).for_each(|x| *x *= alpha);
        self.c *= alpha;
    }
}

/// `sum_i v_i tanh(w_i t + b_i) + c`.
pub fn nn_yield(params: &NnParams, t: f64) -> f64 {
    params
        .w
        .iter()
        .zip(&params.b)
        .zip(&params.v)
        .map(|((w, b), v)| v * (w * t + b).tanh())
        .sum::<f64>()
        + params.c
}

/// Yield at `t`, adding `scale * dy/dparams` into `grad`.
fn yield_backprop(params: &NnParams, t: f64, scale: f64, grad: &mut NnParams) -> f64 {
    let mut y = 0.0;
    for i in 0..params.hidden() {
        let a = (params.w[i] * t + params.b[i]).tanh();
        let da = params.v[i] * (1.0 - a * a);
        y += params.v[i] * a;
        grad.v[i] += scale * a;
        grad.b[i] += scale * da;
        grad.w[i] += scale * da * t;
    }
    grad.c += scale;
    y + params.c
}

/// Model price of one bond under the network curve.
fn model_price(params: &NnParams, bond: &Bond) -> f64 {
    bond.payments()
        .into_iter()
        .map(|(t, a)| a * (-t * nn_yield(params, t)).exp())
        .sum()
}

/// Price error `p - p_hat` for one bond, with `scale * d(p_hat)/dparams`
/// added into `grad`.
fn price_error_backprop(params: &NnParams, bond: &Bond, scale: f64, grad: &mut NnParams) -> f64 {
    let payments = bond.payments();
    let mut local = NnParams::zeros(params.hidden());
    let mut model = 0.0;
    for (t, a) in payments {
        let mut dy = NnParams::zeros(params.hidden());
        let y = yield_backprop(params, t, 1.0, &mut dy);
        let pv = a * (-t * y).exp();
        model += pv;
        local.add_scaled(-t * pv, &dy);
    }
    grad.add_scaled(scale, &local);
    bond.market_price - model
}

/// Mean squared price error over the snapshot.
pub fn loss_error(params: &NnParams, snapshot: &MarketSnapshot) -> f64 {
    let m = snapshot.bonds.len() as f64;
    snapshot
        .bonds
        .iter()
        .map(|bond| {
            let e = bond.market_price - model_price(params, bond);
            e * e
        })
        .sum::<f64>()
        / m
}

pub fn loss_error_grad(params: &NnParams, snapshot: &MarketSnapshot) -> (f64, NnParams) {
    let m = snapshot.bonds.len() as f64;
    let mut grad = NnParams::zeros(params.hidden());
    let mut loss = 0.0;
    for bond in &snapshot.bonds {
        let mut dp = NnParams::zeros(params.hidden());
        let e = price_error_backprop(params, bond, 1.0, &mut dp);
        loss += e * e;
        // d(e^2) = -2 e d(p_hat)
        grad.add_scaled(-2.0 * e / m, &dp);
    }
    (loss / m, grad)
}

fn slopes<'a>(ys: &'a [f64], grid: &'a [f64]) -> impl Iterator<Item = (usize, f64)> + 'a {
    (1..grid.len()).map(move |i| (i, (ys[i] - ys[i - 1]) / (grid[i] - grid[i - 1])))
}

/// Index of the steepest adjacent pair (the later point) and its slope.
fn steepest(ys: &[f64], grid: &[f64]) -> (usize, f64) {
    let mut best = (1, 0.0f64);
    let mut best_abs = -1.0;
    for (i, s) in slopes(ys, grid) {
        if s.abs() > best_abs {
            best_abs = s.abs();
            best = (i, s);
        }
    }
    best
}

/// Largest absolute slope between adjacent grid points.
pub fn loss_smooth(params: &NnParams, grid: &[f64]) -> f64 {
    let ys: Vec<f64> = grid.iter().map(|&t| nn_yield(params, t)).collect();
    slopes(&ys, grid).map(|(_, s)| s.abs()).fold(0.0, f64::max)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Yields on the grid plus the per-point gradients.
fn grid_backprop(params: &NnParams, grid: &[f64]) -> (Vec<f64>, Vec<NnParams>) {
    grid.iter()
        .map(|&t| {
            let mut g = NnParams::zeros(params.hidden());
            let y = yield_backprop(params, t, 1.0, &mut g);
            (y, g)
        })
        .unzip()
}

fn smooth_from_grid(ys: &[f64], dys: &[NnParams], grid: &[f64]) -> (f64, NnParams) {
    let mut grad = NnParams::zeros(dys[0].hidden());
    let (i, s) = steepest(ys, grid);
    let k = sign(s) / (grid[i] - grid[i - 1]);
    grad.add_scaled(k, &dys[i]);
    grad.add_scaled(-k, &dys[i - 1]);
    (s.abs(), grad)
}

pub fn loss_smooth_grad(params: &NnParams, grid: &[f64]) -> (f64, NnParams) {
    let (ys, dys) = grid_backprop(params, grid);
    smooth_from_grid(&ys, &dys, grid)
}

/// `(1/N) sum_{i=2..N} |((y_i - y_{i-1}) - (o_i - o_{i-1})) / (t_i - t_{i-1})|`
/// for network yields `y` and benchmark yields `o` on an `N`-point grid.
/// The sum has `N - 1` terms but is divided by `N`.
pub fn loss_trend(params: &NnParams, benchmark: &BenchmarkCurve, grid: &[f64]) -> f64 {
    let ys: Vec<f64> = grid.iter().map(|&t| nn_yield(params, t)).collect();
    let os: Vec<f64> = grid.iter().map(|&t| benchmark.rate_at(t)).collect();
    trend_value(&ys, &os, grid)
}

fn trend_value(ys: &[f64], os: &[f64], grid: &[f64]) -> f64 {
    let n = grid.len() as f64;
    (1..grid.len())
        .map(|i| (((ys[i] - ys[i - 1]) - (os[i] - os[i - 1])) / (grid[i] - grid[i - 1])).abs())
        .sum::<f64>()
        / n
}

fn trend_from_grid(ys: &[f64], dys: &[NnParams], os: &[f64], grid: &[f64]) -> (f64, NnParams) {
    let n = grid.len() as f64;
    let mut grad = NnParams::zeros(dys[0].hidden());
    for i in 1..grid.len() {
        let dt = grid[i] - grid[i - 1];
        let e = ((ys[i] - ys[i - 1]) - (os[i] - os[i - 1])) / dt;
        let k = sign(e) / (dt * n);
        grad.add_scaled(k, &dys[i]);
        grad.add_scaled(-k, &dys[i - 1]);
    }
    (trend_value(ys, os, grid), grad)
}

pub fn loss_trend_grad(params: &NnParams, benchmark: &BenchmarkCurve, grid: &[f64]) -> (f64, NnParams) {
    let (ys, dys) = grid_backprop(params, grid);
    let os: Vec<f64> = grid.iter().map(|&t| benchmark.rate_at(t)).collect();
    trend_from_grid(&ys, &dys, &os, grid)
}

pub fn total_loss(params: &NnParams, snapshot: &MarketSnapshot, config: &TrainConfig) -> f64 {
    let grid = config.grid.tenors();
    loss_error(params, snapshot)
        + config.gamma1 * loss_smooth(params, grid)
        + config.gamma2 * loss_trend(params, &snapshot.benchmark, grid)
}

pub fn total_loss_grad(params: &NnParams, snapshot: &MarketSnapshot, config: &TrainConfig) -> (f64, NnParams) {
    let grid = config.grid.tenors();
    let (le, mut grad) = loss_error_grad(params, snapshot);
    let (ls, gs) = loss_smooth_grad(params, grid);
    let (lt, gt) = loss_trend_grad(params, &snapshot.benchmark, grid);
    grad.add_scaled(config.gamma1, &gs);
    grad.add_scaled(config.gamma2, &gt);
    (le + config.gamma1 * ls + config.gamma2 * lt, grad)
}

/// Where the smoothness and trend penalties enter the update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerMode {
    /// Every per-bond step includes both penalties.
    PerBond,
    /// Per-bond steps use the price error only; one extra step on the
    /// penalties closes each epoch.
    PerEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub grid: TenorGrid,
    pub seed: u64,
    pub init_scale: f64,
    pub hidden: usize,
    pub regularizer_mode: RegularizerMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-8,
            epochs: 1000,
            gamma1: 1e3,
            gamma2: 1e4,
            grid: TenorGrid::standard(),
            seed: 0,
            init_scale: 0.1,
            hidden: 3,
            regularizer_mode: RegularizerMode::PerBond,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation(None, "learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::validation(None, "epochs", "at least one epoch required"));
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) {
            return Err(Error::validation(None, "gamma", "penalty weights must be non-negative"));
        }
        if self.hidden == 0 {
            return Err(Error::validation(None, "hidden", "at least one hidden unit required"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::validation(None, "init_scale", "must be non-negative"));
        }
        Ok(())
    }
}

/// Starting weights: `w ~ N(0, s / T_max)`, `b, v ~ N(0, s)` and `c` at the
/// mean YTM of the bonds (bonds without a YTM are ignored).
pub fn init_params(snapshot: &MarketSnapshot, config: &TrainConfig) -> NnParams {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let span = snapshot.bonds.iter().map(|b| b.maturity).fold(0.0, f64::max).max(1e-6);
    let mut draw = |sd: f64| {
        if sd == 0.0 {
            0.0
        } else {
            Normal::new(0.0, sd).expect("finite sd").sample(&mut rng)
        }
    };
    let h = config.hidden;
    let w = (0..h).map(|_| draw(config.init_scale / span)).collect();
    let b = (0..h).map(|_| draw(config.init_scale)).collect();
    let v = (0..h).map(|_| draw(config.init_scale)).collect();
    let ytms: Vec<f64> = snapshot.bonds.iter().filter_map(|b| yield_to_maturity(b).ok()).collect();
    let c = if ytms.is_empty() {
        0.0
    } else {
        ytms.iter().sum::<f64>() / ytms.len() as f64
    };
    NnParams { w, b, v, c }
}

/// Trained network together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NnModelRecord", into = "NnModelRecord")]
pub struct NnModel {
    pub params: NnParams,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct NnModelRecord {
    #[serde(rename = "H")]
    hidden: usize,
    w: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    c: f64,
    config_echo: TrainConfig,
}

impl From<NnModel> for NnModelRecord {
    fn from(m: NnModel) -> Self {
        Self {
            hidden: m.params.hidden(),
            w: m.params.w,
            b: m.params.b,
            v: m.params.v,
            c: m.params.c,
            config_echo: m.config,
        }
    }
}

impl TryFrom<NnModelRecord> for NnModel {
    type Error = Error;

    fn try_from(r: NnModelRecord) -> Result<Self> {
        let params = NnParams {
            w: r.w,
            b: r.b,
            v: r.v,
            c: r.c,
        };
        params.validate()?;
        if params.hidden() != r.hidden {
            return Err(Error::validation(None, "H", "does not match weight lengths"));
        }
        Ok(Self {
            params,
            config: r.config_echo,
        })
    }
}

impl YieldCurve for NnParams {
    fn yield_at(&self, t: f64) -> Result<f64> {
        Ok(nn_yield(self, t))
    }
}

impl YieldCurve for NnModel {
    fn yield_at(&self, t: f64) -> Result<f64> {
        Ok(nn_yield(&self.params, t))
    }
}

/// Per-bond gradient descent on the composite loss.
///
/// Each epoch visits the bonds in ascending maturity (ties by id) and takes
/// one step of size `learning_rate` per bond on
/// `(p_j - p_hat_j)^2 + gamma1 L_smooth + gamma2 L_trend`
/// (or on the price term alone under [`RegularizerMode::PerEpoch`]).
/// Deterministic in `config.seed`.
pub fn train(snapshot: &MarketSnapshot, config: &TrainConfig) -> Result<NnModel> {
    config.validate()?;
    snapshot.validate()?;
    let mut params = init_params(snapshot, config);
    train_from(snapshot, config, &mut params)?;
    Ok(NnModel {
        params,
        config: config.clone(),
    })
}

/// Runs the training loop starting from `params`, updating them in place.
pub fn train_from(snapshot: &MarketSnapshot, config: &TrainConfig, params: &mut NnParams) -> Result<()> {
    config.validate()?;
    params.validate()?;
    let grid = config.grid.tenors();
    let bench: Vec<f64> = grid.iter().map(|&t| snapshot.benchmark.rate_at(t)).collect();
    let order = snapshot.maturity_order();
    let use_penalties = config.gamma1 > 0.0 || config.gamma2 > 0.0;
    let h = params.hidden();

    let penalty_step = |params: &NnParams, grad: &mut NnParams| -> f64 {
        let (ys, dys) = grid_backprop(params, grid);
        let mut loss = 0.0;
        if config.gamma1 > 0.0 {
            let (ls, gs) = smooth_from_grid(&ys, &dys, grid);
            grad.add_scaled(config.gamma1, &gs);
            loss += config.gamma1 * ls;
        }
        if config.gamma2 > 0.0 {
            let (lt, gt) = trend_from_grid(&ys, &dys, &bench, grid);
            grad.add_scaled(config.gamma2, &gt);
            loss += config.gamma2 * lt;
        }
        loss
    };

    for epoch in 1..=config.epochs {
        for &j in &order {
            let mut grad = NnParams::zeros(h);
            let mut dp = NnParams::zeros(h);
            let e = price_error_backprop(params, &snapshot.bonds[j], 1.0, &mut dp);
            grad.add_scaled(-2.0 * e, &dp);
            let mut loss = e * e;
            if use_penalties && config.regularizer_mode == RegularizerMode::PerBond {
                loss += penalty_step(params, &mut grad);
            }
            grad.scale(config.learning_rate);
            params.add_scaled(-1.0, &grad);
            if !loss.is_finite() || !params.iter().all(f64::is_finite) {
                return Err(Error::Divergence { epoch, bond_index: j });
            }
        }
        if use_penalties && config.regularizer_mode == RegularizerMode::PerEpoch {
            let mut grad = NnParams::zeros(h);
            let loss = penalty_step(params, &mut grad);
            params.add_scaled(-config.learning_rate, &grad);
            if !loss.is_finite() || !params.iter().all(f64::is_finite) {
                return Err(Error::Divergence {
                    epoch,
                    bond_index: snapshot.bonds.len(),
                });
            }
        }
    }
    Ok(())
}
