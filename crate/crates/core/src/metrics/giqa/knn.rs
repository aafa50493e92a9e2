//! Exhaustive K-nearest-neighbour realism score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurestore::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnStatistic {
    /// Mean distance to the K nearest references; lower is better.
    #[default]
    MeanDistance,
    /// `-ln(mean distance)`; higher is better.
    NegLogMeanDistance,
}

#[derive(Debug, Clone)]
pub struct KnnIndex {
    reference: EmbeddingMatrix,
    k: usize,
}

impl KnnIndex {
    pub fn new(reference: EmbeddingMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if k > reference.n_rows() {
            return Err(Error::TooManyComponents {
                k,
                n: reference.n_rows(),
            });
        }
        Ok(Self { reference, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reference(&self) -> &EmbeddingMatrix {
        &self.reference
    }
}

/// Mean Euclidean distance from `x` to its K nearest reference rows.
pub fn knn_score(index: &KnnIndex, x: &[f64]) -> Result<f64> {
    let reference = &index.reference;
    if x.len() != reference.dims() {
        return Err(Error::DimensionMismatch {
            expected: reference.dims(),
            got: x.len(),
        });
    }
    let mut distances: Vec<f64> = reference
        .rows()
        .map(|(_, row)| {
            row.iter()
                .zip(x)
                .map(|(&r, xi)| {
                    let diff = xi - f64::from(r);
                    diff * diff
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let k = index.k;
    if k < distances.len() {
        distances.select_nth_unstable_by(k - 1, f64::total_cmp);
        distances.truncate(k);
    }
    distances.sort_by(f64::total_cmp);
    Ok(distances.iter().sum::<f64>() / k as f64)
}

pub fn knn_statistic(index: &KnnIndex, x: &[f64], statistic: KnnStatistic) -> Result<f64> {
    let mean = knn_score(index, x)?;
    Ok(match statistic {
        KnnStatistic::MeanDistance => mean,
        KnnStatistic::NegLogMeanDistance => -mean.max(f64::MIN_POSITIVE).ln(),
    })
}
