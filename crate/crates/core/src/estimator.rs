//! One entry point over the four estimators.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kr::{fit_kr, KrConfig, KrModel};
use crate::market::MarketSnapshot;
use crate::nn::{train, NnModel, TrainConfig};
use crate::nss::{fit_nss, NssConfig, NssFit};
use crate::pricing::{bootstrap, BootstrapCurve};
use crate::pricing::YieldCurve;

/// Anything that turns a snapshot into a curve. The evaluation protocols
/// are written against this trait so that reference curves can stand in
/// for a real estimator.
pub trait CurveEstimator: Sync {
    fn name(&self) -> String;

    /// Configuration echoed into experiment reports.
    fn config(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn fit_curve(&self, snapshot: &MarketSnapshot) -> Result<Box<dyn YieldCurve>>;
}

/// Estimator choice together with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "lowercase")]
pub enum Estimator {
    Bootstrap,
    Nss(NssConfig),
    Kr(KrConfig),
    Nn(TrainConfig),
}

impl Estimator {
    pub const NAMES: [&'static str; 4] = ["bootstrap", "nss", "kr", "nn"];

    /// Estimator with default configuration, by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "bootstrap" => Some(Self::Bootstrap),
            "nss" => Some(Self::Nss(NssConfig::default())),
            "kr" => Some(Self::Kr(KrConfig::default())),
            "nn" => Some(Self::Nn(TrainConfig::default())),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Bootstrap => "bootstrap",
            Self::Nss(_) => "nss",
            Self::Kr(_) => "kr",
            Self::Nn(_) => "nn",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bootstrap => Ok(()),
            Self::Nss(c) => c.validate(),
            Self::Kr(c) => c.kernel.validate(),
            Self::Nn(c) => c.validate(),
        }
    }

    pub fn fit(&self, snapshot: &MarketSnapshot) -> Result<FittedModel> {
        Ok(match self {
            Self::Bootstrap => FittedModel::Bootstrap(bootstrap(snapshot)?),
            Self::Nss(c) => FittedModel::Nss(fit_nss(snapshot, c)?),
            Self::Kr(c) => FittedModel::Kr(fit_kr(snapshot, c.lambda, c.kernel)?),
            Self::Nn(c) => FittedModel::Nn(train(snapshot, c)?),
        })
    }
}

impl CurveEstimator for Estimator {
    fn name(&self) -> String {
        self.label().to_string()
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_default()
    }

    fn fit_curve(&self, snapshot: &MarketSnapshot) -> Result<Box<dyn YieldCurve>> {
        Ok(Box::new(self.fit(snapshot)?))
    }
}

/// Output of [`Estimator::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", content = "model", rename_all = "lowercase")]
pub enum FittedModel {
    Bootstrap(BootstrapCurve),
    Nss(NssFit),
    Kr(KrModel),
    Nn(NnModel),
}

impl FittedModel {
    /// The model's own pretty-printed JSON, without the estimator tag.
    pub fn model_json(&self) -> serde_json::Result<String> {
        match self {
            Self::Bootstrap(m) => serde_json::to_string_pretty(m),
            Self::Nss(m) => serde_json::to_string_pretty(m),
            Self::Kr(m) => serde_json::to_string_pretty(m),
            Self::Nn(m) => serde_json::to_string_pretty(m),
        }
    }

    fn curve(&self) -> &dyn YieldCurve {
        match self {
            Self::Bootstrap(m) => m,
            Self::Nss(m) => m,
            Self::Kr(m) => m,
            Self::Nn(m) => m,
        }
    }
}

impl YieldCurve for FittedModel {
    fn yield_at(&self, t: f64) -> Result<f64> {
        self.curve().yield_at(t)
    }

    fn discount(&self, t: f64) -> Result<f64> {
        self.curve().discount(t)
    }
}
