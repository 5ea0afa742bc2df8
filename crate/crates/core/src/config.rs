//! Experiment configuration files.
//!
//! ```json
//! { "experiment": "second-diff", "seed": 7, "params": { "samples": 30 } }
//! ```
//! `params` is parsed by the named experiment into its own parameter struct;
//! unknown keys at either level are errors.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory; the CLI flag wins over this.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig { experiment: experiment.into(), seed: None, out: None, params: empty_object() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !c.params.is_object() {
            return Err(Error::Config("params must be a JSON object".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Parameters of one experiment. Missing keys take defaults.
pub trait Params: Serialize + DeserializeOwned + Default {
    fn check(&self) -> Result<()>;
    /// Apply a `--spacing` override: the finest level becomes `h`.
    fn set_spacing(&mut self, h: f64);
}

pub fn parse_params<P: Params>(value: &serde_json::Value, spacing: Option<f64>) -> Result<P> {
    let mut p: P = serde_json::from_value(value.clone()).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(h) = spacing {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("spacing {h} must be positive")));
        }
        p.set_spacing(h);
    }
    p.check().map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    })?;
    Ok(p)
}

/// Refinement ladder ending at `h`, keeping the number of levels.
pub fn ladder(levels: usize, h: f64) -> Vec<f64> {
    (0..levels).rev().map(|k| h * 2f64.powi(k as i32)).collect()
}

pub fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}
