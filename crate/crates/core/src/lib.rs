//! Evaluation toolkit for generated images: CLIP alignment and GIQA realism
//! scoring, orientation-aware model comparison tables, and exact statistics
//! for paired-preference surveys.

pub mod error;
pub mod featurestore;
pub mod metrics;
pub mod ranking;
pub mod surveystats;
pub mod variant;

pub use error::{Error, Result};
pub use featurestore::{DatasetManifest, EmbeddingMatrix, ImageRecord, TrainConfig};
pub use metrics::{NormalizationStrategy, NormalizedSeries, ScoreSeries};
pub use ranking::{ModelComparisonReport, ModelSummary, ReportFormat};
pub use surveystats::{LikertSummary, PairOutcome, TestResult};
pub use variant::{Metric, ModelVariantId, Orientation};
