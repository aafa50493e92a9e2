//! Principal component analysis on feature rows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurestore::EmbeddingMatrix;

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `q` orthonormal rows of length `dims`, by descending variance.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each retained component.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_variance_ratio(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 0.0;
        }
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }
}

/// Number of covariance directions with non-negligible variance.
pub fn numerical_rank(features: &EmbeddingMatrix) -> usize {
    let rows = rows_f64(features);
    let (eigvals, _) = centered_eigen(&rows);
    let max = eigvals.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    eigvals.iter().filter(|&&l| l > max * RANK_TOLERANCE).count()
}

pub fn pca_fit(features: &EmbeddingMatrix, q: usize) -> Result<PcaModel> {
    pca_fit_rows(&rows_f64(features), q)
}

pub fn pca_fit_rows(rows: &[Vec<f64>], q: usize) -> Result<PcaModel> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 rows".into()));
    }
    let max_q = (n - 1).min(d);
    if q == 0 || q > max_q {
        return Err(Error::ComponentsOutOfRange { q, max: max_q });
    }

    let mean = column_mean(rows);
    let (eigvals, eigvecs) = centered_eigen(rows);
    let largest = eigvals[0];
    let rank = if largest <= 0.0 {
        0
    } else {
        eigvals.iter().filter(|&&l| l > largest * RANK_TOLERANCE).count()
    };
    if q > rank {
        return Err(Error::RankDeficient { q, rank });
    }

    let components = eigvecs
        .into_iter()
        .take(q)
        .map(|mut v| {
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
            }
            v
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance: eigvals[..q].to_vec(),
        total_variance: eigvals.iter().map(|l| l.max(0.0)).sum(),
    })
}

pub fn pca_project(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dims() {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: x.len(),
        });
    }
    Ok(model
        .components
        .iter()
        .map(|c| {
            c.iter()
                .zip(x.iter().zip(&model.mean))
                .map(|(ci, (xi, mi))| ci * (xi - mi))
                .sum()
        })
        .collect())
}

pub(crate) fn rows_f64(features: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    (0..features.n_rows()).map(|i| features.row_f64(i)).collect()
}

fn column_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Eigenpairs of the sample covariance (denominator n - 1), sorted by
/// descending eigenvalue. When there are fewer rows than dimensions the
/// n x n Gram matrix is decomposed instead and mapped back.
fn centered_eigen(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mean = column_mean(rows);
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let mut pairs: Vec<(f64, Vec<f64>)> = if n >= d {
        let cov = centered.transpose() * &centered / denom;
        let eig = SymmetricEigen::new(cov);
        (0..d)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    } else {
        let gram = &centered * centered.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        (0..n)
            .map(|k| {
                let lambda = eig.eigenvalues[k];
                let u = eig.eigenvectors.column(k);
                let mut v: Vec<f64> = (centered.transpose() * u).iter().copied().collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                (lambda, v)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.into_iter().unzip()
}
