//! Kernel-ridge estimation of the discount curve.
//!
//! The discount function is written as `d(t) = 1 + g(t)` with `g` in the
//! Hilbert space of functions on `[0, inf)` with `g(0) = 0` and norm
//!
//! ```text
//! ||g||^2 = int_0^inf a g'(u)^2 + b g''(u)^2 du.
//! ```
//!
//! Its reproducing kernel, with `nu = sqrt(a / b)`, `m = min(s, t)` and
//! `M = max(s, t)`, is
//!
//! ```text
//! k(s, t) = m / a - sinh(nu m) e^{-nu M} / (a nu)
//! ```
//!
//! which reduces to `min(s, t) / a` as `b -> 0`. Minimising the weighted
//! squared price error plus `lambda ||g||^2` over `g` has a solution in the
//! span of `k(., t_l)` over all cashflow dates `t_l`, found by one symmetric
//! linear solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketSnapshot;
use crate::pricing::{duration_weights, YieldCurve};

/// Cashflow dates closer than this (years) share one anchor.
const ANCHOR_MERGE_TOL: f64 = 1e-9;

/// Weights of the first- and second-derivative terms in the smoothness norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    pub a: f64,
    pub b: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0 }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        // a = 0 leaves linear functions with zero norm: not a reproducing
        // kernel Hilbert space.
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation(None, "kernel.a", "first-derivative weight must be positive"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::validation(None, "kernel.b", "second-derivative weight must be non-negative"));
        }
        Ok(())
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let linear = lo / self.a;
        if self.b == 0.0 {
            return linear;
        }
        let nu = (self.a / self.b).sqrt();
        // sinh(nu lo) e^{-nu hi}, written without overflow
        let coupling = 0.5 * ((-nu * (hi - lo)).exp() - (-nu * (hi + lo)).exp());
        linear - coupling / (self.a * nu)
    }
}

/// Reproducing kernel of the smoothness norm; see the module docs.
pub fn kr_kernel(s: f64, t: f64, params: &KernelParams) -> Result<f64> {
    params.validate()?;
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::Domain(format!("kernel arguments must be positive, got ({s}, {t})")));
    }
    Ok(params.value(s, t))
}

/// Kernel matrix `K[i][j] = k(t_i, t_j)`.
pub fn kernel_matrix(times: &[f64], params: &KernelParams) -> DMatrix<f64> {
    DMatrix::from_fn(times.len(), times.len(), |i, j| params.value(times[i], times[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrConfig {
    pub lambda: f64,
    pub kernel: KernelParams,
}

impl Default for KrConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            kernel: KernelParams::default(),
        }
    }
}

/// The quadratic problem behind a kernel-ridge fit.
#[derive(Debug, Clone)]
pub struct KrProblem {
    pub anchor_times: Vec<f64>,
    /// Row `j` holds bond `j`'s payments at the anchor times.
    pub cashflows: DMatrix<f64>,
    pub kernel: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub prices: DVector<f64>,
    pub lambda: f64,
    pub kernel_params: KernelParams,
}

impl KrProblem {
    pub fn new(snapshot: &MarketSnapshot, lambda: f64, kernel_params: KernelParams) -> Result<Self> {
        kernel_params.validate()?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::validation(None, "lambda", "must be positive"));
        }
        let weights = DVector::from_vec(duration_weights(snapshot)?);
        let payments: Vec<Vec<(f64, f64)>> = snapshot.bonds.iter().map(|b| b.payments()).collect();

        let mut all: Vec<f64> = payments.iter().flatten().map(|&(t, _)| t).collect();
        all.sort_by(f64::total_cmp);
        let mut anchors: Vec<f64> = Vec::with_capacity(all.len());
        for t in all {
            if anchors.last().is_none_or(|&last| t - last > ANCHOR_MERGE_TOL) {
                anchors.push(t);
            }
        }

        let mut cashflows = DMatrix::zeros(payments.len(), anchors.len());
        for (j, flows) in payments.iter().enumerate() {
            for &(t, amount) in flows {
                let hi = anchors.partition_point(|&a| a <= t + ANCHOR_MERGE_TOL);
                cashflows[(j, hi - 1)] += amount;
            }
        }
        Ok(Self {
            kernel: kernel_matrix(&anchors, &kernel_params),
            anchor_times: anchors,
            cashflows,
            weights,
            prices: DVector::from_iterator(snapshot.bonds.len(), snapshot.bonds.iter().map(|b| b.market_price)),
            lambda,
            kernel_params,
        })
    }

    /// Model prices `C (1 + K alpha)`.
    pub fn model_prices(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let discounts = (&self.kernel * alpha).add_scalar(1.0);
        &self.cashflows * discounts
    }

    /// Weighted squared price error.
    pub fn price_error(&self, alpha: &DVector<f64>) -> f64 {
        let r = &self.prices - self.model_prices(alpha);
        r.iter().zip(self.weights.iter()).map(|(r, w)| w * r * r).sum()
    }

    /// `alpha^T K alpha`.
    pub fn roughness(&self, alpha: &DVector<f64>) -> f64 {
        alpha.dot(&(&self.kernel * alpha))
    }

    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        self.price_error(alpha) + self.lambda * self.roughness(alpha)
    }

    /// Minimiser `alpha = C^T (C K C^T + lambda W^{-1})^{-1} (p - C 1)`.
    pub fn solve(&self) -> Result<DVector<f64>> {
        let ck = &self.cashflows * &self.kernel;
        let mut system = &ck * self.cashflows.transpose();
        for j in 0..system.nrows() {
            system[(j, j)] += self.lambda / self.weights[j];
        }
        let rhs = &self.prices - self.cashflows.column_sum();
        let trace = system.trace().abs();

        let mut jitter = 0.0;
        loop {
            let mut shifted = system.clone();
            for j in 0..shifted.nrows() {
                shifted[(j, j)] += jitter;
            }
            if let Some(chol) = shifted.cholesky() {
                let beta = chol.solve(&rhs);
                if beta.iter().all(|v| v.is_finite()) {
                    return Ok(self.cashflows.transpose() * beta);
                }
            }
            jitter = if jitter == 0.0 { 1e-12 * trace } else { jitter * 10.0 };
            if jitter > 1e-6 * trace * (1.0 + 1e-9) || trace == 0.0 {
                break;
            }
        }
        let eig = SymmetricEigen::new(system).eigenvalues;
        let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        Err(Error::Singular {
            condition: max / min,
            message: "kernel-ridge system not positive definite; lambda too small or duplicated cashflow dates".into(),
        })
    }
}

/// Fitted kernel-ridge discount curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrModel {
    pub anchor_times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub kernel_params: KernelParams,
    /// Objective value at the solution.
    pub objective: f64,
}

pub fn fit_kr(snapshot: &MarketSnapshot, lambda: f64, kernel_params: KernelParams) -> Result<KrModel> {
    let problem = KrProblem::new(snapshot, lambda, kernel_params)?;
    let alpha = problem.solve()?;
    Ok(KrModel {
        objective: problem.objective(&alpha),
        anchor_times: problem.anchor_times,
        alphas: alpha.iter().copied().collect(),
        lambda,
        kernel_params,
    })
}

/// `1 + sum_l alpha_l k(t, t_l)`.
pub fn kr_discount(model: &KrModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("discount needs t > 0, got {t}")));
    }
    Ok(1.0
        + model
            .anchor_times
            .iter()
            .zip(&model.alphas)
            .map(|(&tl, a)| a * model.kernel_params.value(t, tl))
            .sum::<f64>())
}

/// `-ln d(t) / t`; fails rather than clipping when `d(t) <= 0`.
pub fn kr_yield(model: &KrModel, t: f64) -> Result<f64> {
    let d = kr_discount(model, t)?;
    if !(d > 0.0) {
        return Err(Error::InvalidDiscount { t, value: d });
    }
    Ok(-d.ln() / t)
}

impl YieldCurve for KrModel {
    fn yield_at(&self, t: f64) -> Result<f64> {
        kr_yield(self, t)
    }

    fn discount(&self, t: f64) -> Result<f64> {
        let d = kr_discount(self, t)?;
        if !(d > 0.0) {
            return Err(Error::InvalidDiscount { t, value: d });
        }
        Ok(d)
    }
}
