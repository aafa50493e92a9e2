//! CLIP score: weighted, zero-clamped cosine similarity between an image
//! embedding and a prompt embedding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurestore::EmbeddingMatrix;
use crate::metrics::series::ScoreSeries;
use crate::variant::{Metric, ModelVariantId};

pub const DEFAULT_WEIGHT: f64 = 100.0;

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

pub fn clip_score(img: &[f64], txt: &[f64], weight: f64) -> Result<f64> {
    Ok(weight * cosine(img, txt)?.max(0.0))
}

/// How generated images are matched to prompt rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptPairing {
    /// Average the score over every prompt row.
    #[default]
    MeanOverPrompts,
    /// Use the prompt row whose id equals the image id.
    ById,
}

/// Scores every image row against the prompt matrix.
pub fn clip_series(
    images: &EmbeddingMatrix,
    prompts: &EmbeddingMatrix,
    variant: ModelVariantId,
    pairing: PromptPairing,
    weight: f64,
) -> Result<ScoreSeries> {
    if images.dims() != prompts.dims() {
        return Err(Error::DimensionMismatch {
            expected: prompts.dims(),
            got: images.dims(),
        });
    }
    let prompt_rows: Vec<Vec<f64>> = (0..prompts.n_rows()).map(|i| prompts.row_f64(i)).collect();
    let mut per_image = BTreeMap::new();
    for i in 0..images.n_rows() {
        let id = &images.row_ids()[i];
        let img = images.row_f64(i);
        let score = match pairing {
            PromptPairing::MeanOverPrompts => {
                let mut total = 0.0;
                for p in &prompt_rows {
                    total += clip_score(&img, p, weight)?;
                }
                total / prompt_rows.len() as f64
            }
            PromptPairing::ById => {
                let j = prompts
                    .row_index(id)
                    .ok_or_else(|| Error::InvalidArgument(format!("no prompt row for image `{id}`")))?;
                clip_score(&img, &prompt_rows[j], weight)?
            }
        };
        per_image.insert(id.clone(), score);
    }
    ScoreSeries::new(Metric::Clip, variant, per_image)
}
