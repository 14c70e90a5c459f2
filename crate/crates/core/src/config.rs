//! The CLI's single JSON configuration document. Unknown keys are rejected;
//! every field has a documented default, so `{}` is a valid config.

use serde::{Deserialize, Serialize};

use crate::conjunction::{ProbabilityModel, ScreeningConfig};
use crate::generator::GeneratorConfig;
use crate::optimize::{CrossEntropyConfig, GridSearchConfig};
use crate::reward::RewardConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub reward: RewardConfig,
    /// Global positional-uncertainty defaults; objects with a positive
    /// pos_sigma of their own override them.
    pub probability: ProbabilityModel,
    pub grid_search: GridSearchConfig,
    pub cross_entropy: CrossEntropyConfig,
    pub generator: GeneratorConfig,
    /// Conjunction screening distance, m.
    pub screen_distance: ScreenDistance,
    /// Danger flag threshold; defaults to the reward collision-probability
    /// threshold when absent.
    pub danger_threshold: Option<f64>,
}

/// Newtype so the default (2000 m) survives `#[serde(default)]` on the
/// containing struct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScreenDistance(pub f64);

impl Default for ScreenDistance {
    fn default() -> Self {
        ScreenDistance(2000.0)
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        self.probability.validate()?;
        self.grid_search.validate()?;
        self.cross_entropy.validate()?;
        self.generator.validate()?;
        if !(self.screen_distance.0 > 0.0) {
            return Err(Error::InvalidInput(
                "screen_distance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Screening parameters implied by this config.
    pub fn screening(&self) -> ScreeningConfig {
        ScreeningConfig {
            screen_distance: self.screen_distance.0,
            danger_threshold: self
                .danger_threshold
                .unwrap_or(self.reward.collision_probability_threshold),
            model: self.probability,
        }
    }
}
