//! Hyperparameters handed to an external fine-tuning job.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    CannyEdge,
    Depth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: u32,
    pub steps: u32,
    /// Probability of replacing a caption with the empty string.
    pub prompt_dropout: f64,
    pub negative_prompts: Vec<String>,
    pub conditioning: BTreeSet<Conditioning>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 4,
            steps: 10_000,
            prompt_dropout: 0.5,
            negative_prompts: vec!["clutter".into(), "dark".into()],
            conditioning: BTreeSet::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.prompt_dropout) {
            return Err(Error::InvalidConfig("prompt_dropout must lie in [0, 1]".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be > 0".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

pub fn emit_train_config(config: &TrainConfig, destination: &Path) -> Result<()> {
    let text = config.to_json()?;
    fs::write(destination, text).map_err(|e| Error::io(destination, e))
}

pub fn load_train_config(source: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    TrainConfig::parse(&text)
}
