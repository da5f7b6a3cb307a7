use std::path::Path;

use plmm::{PlmmConfig, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSettings {
    pub folds: usize,
    /// Epoch index for the k-fold perplexity; the last epoch when absent.
    pub epoch: Option<usize>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            epoch: None,
        }
    }
}

/// Everything a command may read from its TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub plmm: PlmmConfig,
    pub evaluate: EvaluateSettings,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Applies a `--seed` override to every seeded component.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.synth.rng_seed = s;
            self.plmm.em.rng_seed = s;
        }
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.synth.validate()?;
        self.plmm.validate()?;
        if self.evaluate.folds < 2 {
            return Err(CliError::Validation("evaluate.folds must be >= 2".into()));
        }
        Ok(())
    }
}
