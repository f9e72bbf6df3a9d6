//! Top-level configuration shared by every pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::Hyperparams;
use crate::dailypomdp::PomdpConfig;
use crate::energy::MetSource;
use crate::signal::SignalConfig;
use crate::simgen::{NoiseChannel, ScheduleTemplate, SignalRecipe};
use crate::{Error, Result};

/// Synthetic data generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub days: usize,
    pub sessions_per_activity: usize,
    pub session_minutes: f64,
    pub template: ScheduleTemplate,
    pub noise: NoiseChannel,
    pub recipe: SignalRecipe,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            days: 10,
            sessions_per_activity: 2,
            session_minutes: 2.5,
            template: ScheduleTemplate::full_day(),
            noise: NoiseChannel::default(),
            recipe: SignalRecipe::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub signal: SignalConfig,
    pub tree: Hyperparams,
    pub cv_folds: usize,
    pub pomdp: PomdpConfig,
    pub sim: SimConfig,
    pub weight_kg: f64,
    pub met_source: MetSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            signal: SignalConfig::default(),
            tree: Hyperparams::default(),
            cv_folds: 10,
            pomdp: PomdpConfig::default(),
            sim: SimConfig::default(),
            weight_kg: 60.0,
            met_source: MetSource::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.tree.validate()?;
        self.pomdp.validate()?;
        self.sim.template.validate()?;
        self.sim.recipe.validate()?;
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter(format!("cv_folds must be >= 2, got {}", self.cv_folds)));
        }
        if !(self.weight_kg > 0.0 && self.weight_kg.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight_kg must be positive, got {}", self.weight_kg)));
        }
        if !(self.sim.session_minutes > 0.0) {
            return Err(Error::InvalidParameter("session_minutes must be positive".into()));
        }
        Ok(())
    }

    /// Reads a JSON config; missing fields take their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
