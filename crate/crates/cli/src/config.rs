use std::fs;
use std::path::Path;

use curvekit_core::kr::KrConfig;
use curvekit_core::nn::TrainConfig;
use curvekit_core::nss::NssConfig;
use curvekit_core::{Error, Estimator, Result, TenorGrid};
use serde::Deserialize;

use crate::args::{ModelArgs, NnShapeArgs};

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub estimator: Option<String>,
    pub grid: Option<TenorGrid>,
    pub nss: NssConfig,
    pub kr: KrConfig,
    pub nn: TrainConfig,
}

impl FitConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Settings resolved from defaults, the config file and flags.
pub struct Resolved {
    pub config: FitConfig,
    pub grid: TenorGrid,
}

pub fn resolve(args: &ModelArgs) -> Result<Resolved> {
    let mut config = FitConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.nss.seed = seed;
        config.nn.seed = seed;
    }
    if let Some(v) = args.starts {
        config.nss.starts = v;
    }
    if let Some(v) = args.nss_iterations {
        config.nss.max_iterations = v;
    }
    if let Some(v) = args.lambda {
        config.kr.lambda = v;
    }
    if let Some(v) = args.kernel_a {
        config.kr.kernel.a = v;
    }
    if let Some(v) = args.kernel_b {
        config.kr.kernel.b = v;
    }
    let nn = &mut config.nn;
    if let Some(v) = args.nn.lr {
        nn.learning_rate = v;
    }
    if let Some(v) = args.nn.epochs {
        nn.epochs = v;
    }
    if let Some(v) = args.nn.gamma1 {
        nn.gamma1 = v;
    }
    if let Some(v) = args.nn.gamma2 {
        nn.gamma2 = v;
    }
    apply_shape(nn, &args.nn.shape);
    let grid = match &args.grid {
        Some(tenors) => TenorGrid::new(tenors.clone())?,
        None => config.grid.clone().unwrap_or_default(),
    };
    Ok(Resolved { config, grid })
}

pub fn apply_shape(nn: &mut TrainConfig, shape: &NnShapeArgs) {
    if let Some(v) = shape.hidden {
        nn.hidden = v;
    }
    if let Some(v) = shape.init_scale {
        nn.init_scale = v;
    }
    if let Some(v) = shape.regularizer {
        nn.regularizer_mode = v.into();
    }
}

impl Resolved {
    pub fn estimator(&self, name: &str) -> Result<Estimator> {
        let estimator = match name.trim().to_ascii_lowercase().as_str() {
            "bootstrap" => Estimator::Bootstrap,
            "nss" => Estimator::Nss(self.config.nss.clone()),
            "kr" => Estimator::Kr(self.config.kr),
            "nn" => Estimator::Nn(self.config.nn.clone()),
            other => {
                return Err(Error::Validation {
                    bond_id: None,
                    field: "estimator".into(),
                    message: format!("unknown estimator '{other}' (expected one of {})", Estimator::NAMES.join(", ")),
                })
            }
        };
        estimator.validate()?;
        Ok(estimator)
    }
}
