use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variant::{Metric, ModelVariantId, Orientation};

/// Raw per-image values of one metric for one model variant, keyed by
/// image id so variants can be joined image by image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub metric: Metric,
    pub variant: ModelVariantId,
    pub per_image: BTreeMap<String, f64>,
    pub orientation: Orientation,
}

impl ScoreSeries {
    /// Builds a series with the metric's natural orientation.
    pub fn new(metric: Metric, variant: ModelVariantId, per_image: BTreeMap<String, f64>) -> Result<Self> {
        Self::with_orientation(metric, variant, per_image, metric.series_orientation())
    }

    pub fn with_orientation(
        metric: Metric,
        variant: ModelVariantId,
        per_image: BTreeMap<String, f64>,
        orientation: Orientation,
    ) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((id, v)) = per_image.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite score {v} for image `{id}`")));
        }
        Ok(Self {
            metric,
            variant,
            per_image,
            orientation,
        })
    }

    pub fn len(&self) -> usize {
        self.per_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_image.is_empty()
    }
}

/// Arithmetic mean of the per-image values.
pub fn mean_score(series: &ScoreSeries) -> Result<f64> {
    mean(series.per_image.values().copied())
}

pub(crate) fn mean(values: impl ExactSizeIterator<Item = f64>) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    Ok(values.sum::<f64>() / n as f64)
}
