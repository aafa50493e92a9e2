//! Realism scoring of generated images against a reference set of real
//! image features: a Gaussian mixture in PCA space for global realism and
//! a K-nearest-neighbour distance for local coherence.

pub mod gmm;
pub mod knn;
pub mod pca;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurestore::EmbeddingMatrix;
use crate::metrics::series::ScoreSeries;
use crate::variant::{Metric, ModelVariantId, Orientation};

pub use gmm::{gmm_fit, gmm_loglik, EmOptions, GmmFit, GmmModel};
pub use knn::{knn_score, knn_statistic, KnnIndex, KnnStatistic};
pub use pca::{numerical_rank, pca_fit, pca_project, PcaModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiqaParams {
    #[serde(rename = "K", alias = "k")]
    pub components: usize,
    pub q: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(rename = "knn_K", alias = "knn_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub knn_statistic: KnnStatistic,
}

impl Default for GiqaParams {
    fn default() -> Self {
        Self {
            components: 8,
            q: 64,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
            knn_k: 5,
            knn_statistic: KnnStatistic::MeanDistance,
        }
    }
}

/// PCA basis plus mixture fitted on the projected reference features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiqaGmm {
    pub pca: PcaModel,
    pub gmm: GmmModel,
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
}

impl GiqaGmm {
    /// Fits on real-image features. `q` is capped at the numerical rank and
    /// at `n - 1`; `K` is capped at the number of rows.
    pub fn fit(reference: &EmbeddingMatrix, params: &GiqaParams) -> Result<Self> {
        let rank = numerical_rank(reference);
        if rank == 0 {
            return Err(Error::RankDeficient { q: params.q, rank });
        }
        let q = params
            .q
            .min(rank)
            .min(reference.n_rows().saturating_sub(1))
            .min(reference.dims());
        if q < params.q {
            log::info!("PCA dimension reduced from {} to {q} (rank {rank})", params.q);
        }
        let pca = pca_fit(reference, q)?;
        let projected = (0..reference.n_rows())
            .map(|i| pca_project(&pca, &reference.row_f64(i)))
            .collect::<Result<Vec<_>>>()?;
        let fit = gmm::fit_rows(
            &projected,
            &EmOptions {
                components: params.components.min(reference.n_rows()),
                max_iter: params.max_iter,
                tol: params.tol,
                seed: params.seed,
            },
        )?;
        Ok(Self {
            pca,
            gmm: fit.model,
            log_likelihood_trace: fit.log_likelihood,
            converged: fit.converged,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Per-image `log p(pca(x))`; less negative means more realistic.
pub fn giqa_gmm_score(
    model: &GmmModel,
    pca: &PcaModel,
    generated: &EmbeddingMatrix,
    variant: ModelVariantId,
) -> Result<ScoreSeries> {
    let mut per_image = BTreeMap::new();
    for (i, id) in generated.row_ids().iter().enumerate() {
        let projected = pca_project(pca, &generated.row_f64(i))?;
        per_image.insert(id.clone(), gmm_loglik(model, &projected)?);
    }
    ScoreSeries::new(Metric::GiqaGmm, variant, per_image)
}

pub fn giqa_knn_score(
    index: &KnnIndex,
    generated: &EmbeddingMatrix,
    variant: ModelVariantId,
    statistic: KnnStatistic,
) -> Result<ScoreSeries> {
    let mut per_image = BTreeMap::new();
    for (i, id) in generated.row_ids().iter().enumerate() {
        per_image.insert(id.clone(), knn_statistic(index, &generated.row_f64(i), statistic)?);
    }
    let orientation = match statistic {
        KnnStatistic::MeanDistance => Orientation::LowerCost,
        KnnStatistic::NegLogMeanDistance => Orientation::HigherBetter,
    };
    ScoreSeries::with_orientation(Metric::GiqaKnn, variant, per_image, orientation)
}
