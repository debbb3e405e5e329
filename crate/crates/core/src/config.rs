//! TOML parameter files. Top-level keys are the utility-model scalars plus
//! `rho_target`; the `[catalog]` and `[train]` sections override the
//! charger catalog and the training hyperparameters. Every missing key
//! falls back to its default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::error::{Error, Result};
use crate::utility::{ChargerCatalog, UtilityParams};

fn default_rho_target() -> f64 {
    0.9
}

/// A full experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    #[serde(flatten)]
    pub params: UtilityParams,
    /// Utilization targeted when sizing a new station.
    #[serde(default = "default_rho_target")]
    pub rho_target: f64,
    #[serde(default)]
    pub catalog: ChargerCatalog,
    #[serde(default)]
    pub train: TrainConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            params: UtilityParams::default(),
            rho_target: default_rho_target(),
            catalog: ChargerCatalog::default(),
            train: TrainConfig::default(),
        }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.into(), source: e })?;
        let settings: Settings = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.catalog.validate()?;
        self.train.validate()?;
        if !(self.rho_target > 0.0 && self.rho_target < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho_target must lie in (0, 1), got {}",
                self.rho_target
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("settings serialize to TOML")
    }
}
