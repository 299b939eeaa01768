//! Yield-curve estimation for small, sparse bond markets.
//!
//! Four estimators share one [`pricing::YieldCurve`] interface:
//!
//! * sequential bootstrapping ([`pricing::bootstrap`]),
//! * Nelson-Siegel-Svensson ([`nss`]),
//! * kernel ridge on the discount curve ([`kr`]),
//! * a shallow tanh network trained with a smoothness/trend regularized loss ([`nn`]).
//!
//! [`evaluation`] hosts the curve metrics and the robustness, stability and
//! leave-one-out protocols used to compare them.

pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod grid;
pub mod kr;
pub mod market;
pub mod nn;
pub mod nss;
pub mod optim;
pub mod pricing;

pub use error::{Error, Result};
pub use estimator::{CurveEstimator, Estimator, FittedModel};
pub use grid::{Bucket, TenorGrid};
pub use market::{BenchmarkCurve, Bond, Cashflow, MarketSnapshot, Regime, ScenarioSpec};
pub use pricing::YieldCurve;
