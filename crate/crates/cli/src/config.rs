//! Run configuration: a single JSON document describing inputs, model
//! parameters, and outputs. Relative paths resolve against the config
//! file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use geneval::metrics::giqa::GiqaParams;
use geneval::metrics::PromptPairing;
use geneval::{Error, Metric, ModelVariantId, NormalizationStrategy, ReportFormat};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct MetricInputs {
    /// Real-image features (GIQA metrics).
    #[serde(default)]
    pub reference_path: Option<PathBuf>,
    pub generated_paths: BTreeMap<ModelVariantId, PathBuf>,
    /// Prompt features (CLIP).
    #[serde(default)]
    pub prompt_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSettings {
    #[serde(default)]
    pub pairing: PromptPairing,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

impl Default for ClipSettings {
    fn default() -> Self {
        Self {
            pairing: PromptPairing::default(),
            weight: default_weight(),
        }
    }
}

fn default_weight() -> f64 {
    geneval::metrics::DEFAULT_WEIGHT
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub manifest_path: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: BTreeMap<Metric, MetricInputs>,
    #[serde(default)]
    pub giqa: GiqaParams,
    #[serde(default)]
    pub clip: ClipSettings,
    #[serde(default)]
    pub normalization: NormalizationStrategy,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<ReportFormat>,
    /// Raw per-variant means for `report`, bypassing `score`.
    #[serde(default)]
    pub raw_means: BTreeMap<Metric, BTreeMap<ModelVariantId, f64>>,
    #[serde(default)]
    pub survey_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.manifest_path, &mut self.output_dir, &mut self.survey_path]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for inputs in self.embeddings.values_mut() {
            inputs.reference_path.iter_mut().for_each(fix);
            inputs.prompt_path.iter_mut().for_each(fix);
            inputs.generated_paths.values_mut().for_each(fix);
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.normalization.validate()?;
        for (metric, inputs) in &self.embeddings {
            if !inputs.generated_paths.contains_key(&ModelVariantId::M0) {
                return Err(Error::InvalidConfig(format!(
                    "embeddings.{metric}: generated_paths needs the baseline M0"
                )));
            }
            let needed = match metric {
                Metric::Clip => ("prompt_path", &inputs.prompt_path),
                Metric::GiqaGmm | Metric::GiqaKnn => ("reference_path", &inputs.reference_path),
            };
            if needed.1.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "embeddings.{metric}: missing {}",
                    needed.0
                )));
            }
        }
        Ok(())
    }
}
