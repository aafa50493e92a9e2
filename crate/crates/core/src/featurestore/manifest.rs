//! Dataset manifests and the seeded train/val/test split.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variant::ModelVariantId;

pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub source_uri: String,
    #[serde(default)]
    pub prompt: String,
    #[serde(default)]
    pub negative_prompts: Vec<String>,
    #[serde(default)]
    pub split: Option<Split>,
    #[serde(default)]
    pub variant: Option<ModelVariantId>,
    /// Free-form source metadata (photographer, description, licence URL).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl ImageRecord {
    pub fn new(id: impl Into<String>, source_uri: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source_uri: source_uri.into(),
            prompt: String::new(),
            negative_prompts: Vec::new(),
            split: None,
            variant: None,
            metadata: serde_json::Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub records: Vec<ImageRecord>,
    pub split_ratios: [f64; 3],
    pub seed: u64,
    /// Which encoder produced the features scored against this dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_source: Option<String>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            split_ratios: DEFAULT_SPLIT_RATIOS,
            seed: 0,
            feature_source: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        validate_ratios(self.split_ratios)?;
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate record id `{}`", r.id)));
            }
        }
        Ok(())
    }

    pub fn counts(&self) -> SplitCounts {
        let count = |s| self.records.iter().filter(|r| r.split == Some(s)).count();
        SplitCounts {
            train: count(Split::Train),
            val: count(Split::Val),
            test: count(Split::Test),
        }
    }
}

fn validate_ratios(ratios: [f64; 3]) -> Result<()> {
    let ok = ratios.iter().all(|r| r.is_finite() && *r >= 0.0) && (ratios.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidRatios(ratios))
    }
}

/// Assigns every record to exactly one split.
///
/// Record order is kept; a seeded permutation of the positions decides
/// membership. Validation and test get `floor(ratio * n)` records each and
/// training takes the remainder, so re-running with the same seed is a no-op.
pub fn split_dataset(manifest: &DatasetManifest) -> Result<DatasetManifest> {
    validate_ratios(manifest.split_ratios)?;
    let n = manifest.records.len();
    if n < 3 {
        return Err(Error::TooFewRecords(n));
    }
    let [_, r_val, r_test] = manifest.split_ratios;
    let n_val = (r_val * n as f64).floor() as usize;
    let n_test = (r_test * n as f64).floor() as usize;
    if n_val == 0 || n_test == 0 {
        log::warn!("split of {n} records leaves val={n_val}, test={n_test}; consider more data or larger ratios");
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
    order.shuffle(&mut rng);

    let mut out = manifest.clone();
    for (pos, &idx) in order.iter().enumerate() {
        out.records[idx].split = Some(if pos < n_val {
            Split::Val
        } else if pos < n_val + n_test {
            Split::Test
        } else {
            Split::Train
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize, seed: u64) -> DatasetManifest {
        DatasetManifest {
            records: (0..n)
                .map(|i| ImageRecord::new(format!("img{i:03}"), format!("file://img{i:03}.jpg")))
                .collect(),
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn hundred_records_split_80_10_10() {
        let out = split_dataset(&manifest(100, 7)).unwrap();
        assert_eq!(
            out.counts(),
            SplitCounts {
                train: 80,
                val: 10,
                test: 10
            }
        );
    }

    #[test]
    fn ten_records_split_8_1_1() {
        let out = split_dataset(&manifest(10, 1)).unwrap();
        assert_eq!(
            out.counts(),
            SplitCounts {
                train: 8,
                val: 1,
                test: 1
            }
        );
    }

    #[test]
    fn seven_records_all_train_under_floor_rule() {
        let out = split_dataset(&manifest(7, 1)).unwrap();
        assert_eq!(
            out.counts(),
            SplitCounts {
                train: 7,
                val: 0,
                test: 0
            }
        );
    }

    #[test]
    fn too_few_records() {
        let err = split_dataset(&manifest(2, 1)).unwrap_err();
        assert!(err.to_string().contains("fewer than 3 records"));
    }

    #[test]
    fn idempotent_and_seed_sensitive() {
        let once = split_dataset(&manifest(50, 11)).unwrap();
        let twice = split_dataset(&once).unwrap();
        assert_eq!(once, twice);
        let other = split_dataset(&manifest(50, 12)).unwrap();
        assert_ne!(
            once.records.iter().map(|r| r.split).collect::<Vec<_>>(),
            other.records.iter().map(|r| r.split).collect::<Vec<_>>()
        );
    }

    #[test]
    fn bad_ratios_rejected() {
        let mut m = manifest(10, 0);
        m.split_ratios = [0.5, 0.3, 0.3];
        assert!(matches!(split_dataset(&m), Err(Error::InvalidRatios(_))));
        m.split_ratios = [1.2, -0.1, -0.1];
        assert!(matches!(split_dataset(&m), Err(Error::InvalidRatios(_))));
    }

    #[test]
    fn json_round_trip() {
        let m = split_dataset(&manifest(5, 3)).unwrap();
        let back: DatasetManifest = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
