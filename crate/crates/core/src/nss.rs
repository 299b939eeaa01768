//! Nelson-Siegel-Svensson curves and their fit to bond prices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketSnapshot;
use crate::optim::{levenberg_marquardt, nelder_mead, LmConfig, NelderMeadConfig};
use crate::pricing::{duration_weights, yield_to_maturity, YieldCurve};

/// Admissible decay scales (years).
pub const LAMBDA_MIN: f64 = 0.05;
pub const LAMBDA_MAX: f64 = 30.0;
/// Lower sanity bound on the long-run level.
pub const BETA0_MIN: f64 = -0.10;
/// Parameter count; also the minimum number of bonds for a fit.
pub const NSS_PARAMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NssParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl NssParams {
    /// Nelson-Siegel curve: Svensson with `beta3 = 0`.
    pub fn nelson_siegel(beta0: f64, beta1: f64, beta2: f64, lambda: f64) -> Self {
        Self {
            beta0,
            beta1,
            beta2,
            beta3: 0.0,
            lambda1: lambda,
            lambda2: lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return Err(Error::validation(None, "lambda", "decay scales must be positive"));
        }
        if !(self.beta0 > BETA0_MIN) {
            return Err(Error::validation(None, "beta0", format!("must exceed {BETA0_MIN}")));
        }
        let all = [self.beta0, self.beta1, self.beta2, self.beta3, self.lambda1, self.lambda2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(None, "nss", "parameters must be finite"));
        }
        Ok(())
    }

    /// Loadings of `(beta0, beta1, beta2, beta3)` in the yield at `t > 0`.
    fn loadings(&self, t: f64) -> [f64; 4] {
        let x1 = t / self.lambda1;
        let x2 = t / self.lambda2;
        let s1 = decay_ratio(x1);
        let s2 = decay_ratio(x2);
        [1.0, s1, s1 - (-x1).exp(), s2 - (-x2).exp()]
    }

    fn betas(&self) -> [f64; 4] {
        [self.beta0, self.beta1, self.beta2, self.beta3]
    }
}

/// `(1 - e^{-x}) / x`, with a series expansion where cancellation bites.
fn decay_ratio(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Spot yield at `t > 0`.
pub fn nss_yield(params: &NssParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("NSS yield needs t > 0, got {t}")));
    }
    Ok(yield_unchecked(params, t))
}

fn yield_unchecked(params: &NssParams, t: f64) -> f64 {
    params
        .loadings(t)
        .iter()
        .zip(params.betas())
        .map(|(l, b)| l * b)
        .sum()
}

/// The `t -> 0+` limit of the yield, `beta0 + beta1`.
pub fn nss_yield_limit(params: &NssParams) -> f64 {
    params.beta0 + params.beta1
}

/// Instantaneous forward rate at `t >= 0`.
pub fn nss_forward(params: &NssParams, t: f64) -> f64 {
    let x1 = t / params.lambda1;
    let x2 = t / params.lambda2;
    let e1 = (-x1).exp();
    let e2 = (-x2).exp();
    params.beta0 + params.beta1 * e1 + params.beta2 * x1 * e1 + params.beta3 * x2 * e2
}

impl YieldCurve for NssParams {
    fn yield_at(&self, t: f64) -> Result<f64> {
        nss_yield(self, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NssConfig {
    /// Number of starting points for the simplex search (at least 8).
    pub starts: usize,
    /// Simplex iteration cap per start.
    pub max_iterations: usize,
    /// Levenberg-Marquardt iteration cap for the final polish of each start.
    pub polish_iterations: usize,
    pub seed: u64,
}

impl Default for NssConfig {
    fn default() -> Self {
        Self {
            starts: 10,
            max_iterations: 3000,
            polish_iterations: 100,
            seed: 0,
        }
    }
}

impl NssConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts < 8 {
            return Err(Error::validation(None, "nss.starts", "at least 8 starts required"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation(None, "nss.max_iterations", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NssFit {
    pub params: NssParams,
    /// Weighted squared price error at `params`.
    pub objective: f64,
    /// Index of the start that produced the best objective.
    pub start_index: usize,
}

impl YieldCurve for NssFit {
    fn yield_at(&self, t: f64) -> Result<f64> {
        nss_yield(&self.params, t)
    }
}

/// Fixed starting decay pairs; extra starts are drawn log-uniformly.
const START_GRID: [(f64, f64); 8] = [
    (1.0, 5.0),
    (0.5, 3.0),
    (2.0, 10.0),
    (0.3, 8.0),
    (3.0, 1.0),
    (1.5, 15.0),
    (5.0, 20.0),
    (0.8, 0.2),
];

struct Problem {
    /// `(time, amount)` for every bond.
    payments: Vec<Vec<(f64, f64)>>,
    prices: Vec<f64>,
    weights: Vec<f64>,
}

impl Problem {
    fn params_from(theta: &[f64]) -> Option<NssParams> {
        let params = NssParams {
            beta0: theta[0],
            beta1: theta[1],
            beta2: theta[2],
            beta3: theta[3],
            lambda1: theta[4].exp().clamp(LAMBDA_MIN, LAMBDA_MAX),
            lambda2: theta[5].exp().clamp(LAMBDA_MIN, LAMBDA_MAX),
        };
        (params.beta0 > BETA0_MIN && theta.iter().all(|v| v.is_finite())).then_some(params)
    }

    /// Pull-back towards the box for log-decays outside it, so the search
    /// does not wander along the flat clamped region.
    fn box_excess(theta: &[f64]) -> f64 {
        let (lo, hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
        theta[4..]
            .iter()
            .map(|v| if *v < lo { lo - v } else if *v > hi { v - hi } else { 0.0 })
            .sum()
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let Some(params) = Self::params_from(theta) else {
            return vec![f64::INFINITY; self.prices.len()];
        };
        let excess = Self::box_excess(theta);
        self.payments
            .iter()
            .zip(&self.prices)
            .zip(&self.weights)
            .map(|((flows, price), w)| {
                let pv: f64 = flows
                    .iter()
                    .map(|&(t, a)| a * (-t * yield_unchecked(&params, t)).exp())
                    .sum();
                w.sqrt() * (price - pv) + excess
            })
            .collect()
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.residuals(theta).iter().map(|r| r * r).sum()
    }
}

/// Linear least-squares betas for YTMs at maturity with decays fixed.
fn warm_betas(maturities: &[f64], ytms: &[f64], lambda1: f64, lambda2: f64) -> [f64; 4] {
    let shape = NssParams {
        beta0: 0.0,
        beta1: 0.0,
        beta2: 0.0,
        beta3: 0.0,
        lambda1,
        lambda2,
    };
    let a = DMatrix::from_fn(maturities.len(), 4, |i, j| shape.loadings(maturities[i])[j]);
    let b = DVector::from_column_slice(ytms);
    match a.svd(true, true).solve(&b, 1e-10) {
        Ok(x) if x.iter().all(|v| v.is_finite()) => [x[0], x[1], x[2], x[3]],
        _ => {
            let mean = ytms.iter().sum::<f64>() / ytms.len() as f64;
            [mean, 0.0, 0.0, 0.0]
        }
    }
}

/// Multi-start fit of the NSS curve minimising the duration-weighted squared
/// price error.
///
/// Each start fixes a decay pair, warm-starts the betas by least squares on
/// the bonds' YTMs, runs a simplex search over `(betas, ln lambda1, ln
/// lambda2)` and finishes with a Levenberg-Marquardt polish. The best start
/// wins; ties go to the lower start index.
pub fn fit_nss(snapshot: &MarketSnapshot, config: &NssConfig) -> Result<NssFit> {
    config.validate()?;
    let m = snapshot.bonds.len();
    if m < NSS_PARAMS {
        return Err(Error::Precondition(format!(
            "NSS fit: \u{2265} {NSS_PARAMS} bonds required, got {m}"
        )));
    }
    let weights = duration_weights(snapshot)?;
    let ytms = snapshot
        .bonds
        .iter()
        .map(yield_to_maturity)
        .collect::<Result<Vec<_>>>()?;
    let maturities: Vec<f64> = snapshot.bonds.iter().map(|b| b.maturity).collect();
    let problem = Problem {
        payments: snapshot.bonds.iter().map(|b| b.payments()).collect(),
        prices: snapshot.bonds.iter().map(|b| b.market_price).collect(),
        weights,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = (0.1f64.ln(), 20.0f64.ln());
    let decays: Vec<(f64, f64)> = (0..config.starts)
        .map(|i| match START_GRID.get(i) {
            Some(&pair) => pair,
            None => (rng.random_range(lo..hi).exp(), rng.random_range(lo..hi).exp()),
        })
        .collect();

    let nm_config = NelderMeadConfig {
        max_iterations: config.max_iterations,
        ..Default::default()
    };
    let lm_config = LmConfig {
        max_iterations: config.polish_iterations,
        ..Default::default()
    };
    let results: Vec<(f64, Vec<f64>)> = decays
        .par_iter()
        .map(|&(l1, l2)| {
            let b = warm_betas(&maturities, &ytms, l1, l2);
            let theta0 = [b[0].max(BETA0_MIN + 1e-3), b[1], b[2], b[3], l1.ln(), l2.ln()];
            let steps = [0.005, 0.005, 0.01, 0.01, 0.3, 0.3];
            let simplex = nelder_mead(|th| problem.objective(th), &theta0, &steps, &nm_config);
            let polished = levenberg_marquardt(|th| problem.residuals(th), &simplex.x, &lm_config);
            if polished.value <= simplex.value {
                (polished.value, polished.x)
            } else {
                (simplex.value, simplex.x)
            }
        })
        .collect();

    let (start_index, (objective, theta)) = results
        .into_iter()
        .enumerate()
        .filter(|(_, (v, _))| v.is_finite())
        .min_by(|(i, (a, _)), (j, (b, _))| a.total_cmp(b).then(i.cmp(j)))
        .ok_or_else(|| Error::FitFailure(format!("all {} NSS starts failed", config.starts)))?;
    let params = Problem::params_from(&theta)
        .ok_or_else(|| Error::FitFailure("NSS optimum left the admissible region".into()))?;
    Ok(NssFit {
        params,
        objective,
        start_index,
    })
}
