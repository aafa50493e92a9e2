//! Per-image scoring: CLIP alignment, GIQA realism, and normalization.

pub mod clip;
pub mod giqa;
pub mod normalize;
pub mod series;

pub use clip::{clip_score, clip_series, cosine, PromptPairing, DEFAULT_WEIGHT};
pub use normalize::{
    normalize_scores, series_from_csv, series_to_csv, Normalization, NormalizationKind, NormalizationStrategy,
    NormalizedPoint, NormalizedSeries,
};
pub use series::{mean_score, ScoreSeries};
