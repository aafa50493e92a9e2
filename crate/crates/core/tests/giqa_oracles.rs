#![allow(clippy::needless_range_loop)]

mod common;

use common::{covariance, jacobi_eigen, random_rows};
use geneval::metrics::giqa::gmm::fit_rows;
use geneval::metrics::giqa::pca::pca_fit_rows;
use geneval::metrics::giqa::{
    giqa_gmm_score, giqa_knn_score, gmm_loglik, pca_project, EmOptions, GiqaGmm, GiqaParams, GmmModel, KnnIndex,
    KnnStatistic,
};
use geneval::{EmbeddingMatrix, Metric, ModelVariantId, Orientation};
use proptest::prelude::*;
use rand::Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn pca_matches_jacobi_eigenvectors() {
    let mut r = common::rng(5);
    // Distinct spreads per axis so the spectrum is well separated.
    let scales = [5.0, 3.0, 2.0, 1.0, 0.5];
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| scales.iter().map(|s| s * r.gen_range(-1.0..1.0)).collect())
        .collect();
    let (vals, vecs) = jacobi_eigen(covariance(&rows));
    let model = pca_fit_rows(&rows, 5).unwrap();
    for c in 0..5 {
        assert!((model.explained_variance[c] - vals[c]).abs() < 1e-9 * vals[0]);
        let align = dot(&model.components[c], &vecs[c]).abs();
        assert!((align - 1.0).abs() < 1e-6, "component {c}: |cos| = {align}");
    }
    assert!((model.total_variance - vals.iter().sum::<f64>()).abs() < 1e-9);
}

#[test]
fn full_rank_projection_preserves_distances() {
    let rows = random_rows(30, 4, 9);
    let model = pca_fit_rows(&rows, 4).unwrap();
    let p: Vec<Vec<f64>> = rows.iter().map(|x| pca_project(&model, x).unwrap()).collect();
    for i in 0..rows.len() {
        for j in 0..i {
            let d0: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum();
            let d1: f64 = p[i].iter().zip(&p[j]).map(|(a, b)| (a - b).powi(2)).sum();
            assert!((d0.sqrt() - d1.sqrt()).abs() < 1e-9);
        }
    }
}

#[test]
fn projection_is_components_times_centred_input() {
    let rows = random_rows(40, 6, 10);
    let model = pca_fit_rows(&rows, 3).unwrap();
    let x = [0.3, -0.2, 0.9, 0.0, -1.1, 0.4];
    let centred: Vec<f64> = x.iter().zip(&model.mean).map(|(a, m)| a - m).collect();
    let want: Vec<f64> = model.components.iter().map(|c| dot(c, &centred)).collect();
    let got = pca_project(&model, &x).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn wide_data_uses_gram_route_consistently() {
    // n < d: the covariance has rank n - 1.
    let rows = random_rows(6, 20, 21);
    let model = pca_fit_rows(&rows, 5).unwrap();
    let (vals, vecs) = jacobi_eigen(covariance(&rows));
    for c in 0..5 {
        assert!((model.explained_variance[c] - vals[c]).abs() < 1e-9);
        assert!((dot(&model.components[c], &vecs[c]).abs() - 1.0).abs() < 1e-6);
    }
    assert!(pca_fit_rows(&rows, 6).is_err());
}

#[test]
fn two_separated_clusters_are_recovered() {
    let mut r = common::rng(8);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let c = if i % 2 == 0 { 10.0 } else { -10.0 };
            vec![c + r.gen_range(-1.0..1.0), c + r.gen_range(-1.0..1.0)]
        })
        .collect();
    let fit = fit_rows(
        &rows,
        &EmOptions {
            components: 2,
            ..EmOptions::default()
        },
    )
    .unwrap();
    let mut centres: Vec<f64> = fit.model.means.iter().map(|m| m[0]).collect();
    centres.sort_by(f64::total_cmp);
    assert!(
        (centres[0] + 10.0).abs() < 0.3 && (centres[1] - 10.0).abs() < 0.3,
        "{centres:?}"
    );
    for w in &fit.model.weights {
        assert!((w - 0.5).abs() < 0.05);
    }
    assert!(fit.converged);
}

#[test]
fn em_trace_is_monotone_and_k1_is_mle() {
    let checked = common::em_property_suite(25, 1e-9, 1e-9).unwrap();
    assert_eq!(checked, 50);
}

#[test]
fn gmm_scores_match_explicit_density() {
    let model = GmmModel {
        weights: vec![0.25, 0.75],
        means: vec![vec![0.0, 1.0], vec![2.0, -1.0]],
        variances: vec![vec![1.0, 0.5], vec![2.0, 0.25]],
        floor: 1e-6,
    };
    let mut r = common::rng(4);
    for _ in 0..10 {
        let x = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
        let mut p = 0.0;
        for k in 0..2 {
            let mut dens = model.weights[k];
            for j in 0..2 {
                let v = model.variances[k][j];
                let z = x[j] - model.means[k][j];
                dens *= (-z * z / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
            }
            p += dens;
        }
        let got = gmm_loglik(&model, &x).unwrap();
        assert!((got - p.ln()).abs() < 1e-12, "{got} vs {}", p.ln());
    }
}

#[test]
fn giqa_gmm_series_scores_each_generated_image() {
    let reference = EmbeddingMatrix::from_rows(
        random_rows(40, 5, 30)
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("r{i}"), r))
            .collect(),
    )
    .unwrap();
    let generated = EmbeddingMatrix::from_rows(
        random_rows(10, 5, 31)
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("g{i}"), r))
            .collect(),
    )
    .unwrap();
    let params = GiqaParams {
        components: 2,
        q: 3,
        ..GiqaParams::default()
    };
    let fitted = GiqaGmm::fit(&reference, &params).unwrap();
    let series = giqa_gmm_score(&fitted.gmm, &fitted.pca, &generated, ModelVariantId::M2).unwrap();
    assert_eq!(series.len(), 10);
    assert_eq!(series.metric, Metric::GiqaGmm);
    assert_eq!(series.orientation, Orientation::HigherBetter);
    for i in 0..10 {
        let z = pca_project(&fitted.pca, &generated.row_f64(i)).unwrap();
        let want = gmm_loglik(&fitted.gmm, &z).unwrap();
        assert_eq!(series.per_image[&format!("g{i}")], want);
    }
}

#[test]
fn giqa_fit_persists_and_reloads() {
    let reference = EmbeddingMatrix::from_rows(
        random_rows(30, 4, 40)
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("r{i}"), r))
            .collect(),
    )
    .unwrap();
    let fitted = GiqaGmm::fit(
        &reference,
        &GiqaParams {
            components: 2,
            q: 2,
            ..GiqaParams::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("giqa.json");
    fitted.save(&path).unwrap();
    assert_eq!(GiqaGmm::load(&path).unwrap(), fitted);
}

#[test]
fn knn_matches_sort_all_oracle() {
    common::knn_equivalence(1, 100).unwrap();
    common::knn_equivalence(5, 100).unwrap();
}

#[test]
fn knn_series_orientation_follows_statistic() {
    let reference = EmbeddingMatrix::from_rows(
        random_rows(20, 3, 50)
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("r{i}"), r))
            .collect(),
    )
    .unwrap();
    let generated = EmbeddingMatrix::from_rows(vec![("g", vec![0.1, 0.2, 0.3])]).unwrap();
    let index = KnnIndex::new(reference, 3).unwrap();
    let plain = giqa_knn_score(&index, &generated, ModelVariantId::M1, KnnStatistic::MeanDistance).unwrap();
    let neglog = giqa_knn_score(&index, &generated, ModelVariantId::M1, KnnStatistic::NegLogMeanDistance).unwrap();
    assert_eq!(plain.orientation, Orientation::LowerCost);
    assert_eq!(neglog.orientation, Orientation::HigherBetter);
    assert!((neglog.per_image["g"] + plain.per_image["g"].ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn knn_score_is_non_negative_and_zero_on_reference(seed in any::<u64>(), k in 1usize..4) {
        let rows = random_rows(12, 3, seed);
        let m = EmbeddingMatrix::from_rows(
            rows.iter().enumerate().map(|(i, r)| (format!("r{i}"), r.clone())).collect(),
        ).unwrap();
        let index = KnnIndex::new(m.clone(), k).unwrap();
        let s = geneval::metrics::giqa::knn_score(&index, &m.row_f64(0)).unwrap();
        prop_assert!(s >= 0.0);
        if k == 1 {
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn pca_components_are_orthonormal(seed in any::<u64>(), d in 2usize..6) {
        let rows = random_rows(25, d, seed);
        let model = pca_fit_rows(&rows, d).unwrap();
        for a in 0..d {
            for b in 0..d {
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot(&model.components[a], &model.components[b]) - want).abs() < 1e-9);
            }
        }
        for w in model.explained_variance.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn em_log_likelihood_never_decreases(seed in any::<u64>(), k in 1usize..4, d in 1usize..4) {
        let rows = random_rows(40, d, seed);
        let fit = fit_rows(&rows, &EmOptions { components: k, seed, ..EmOptions::default() }).unwrap();
        for w in fit.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        let wsum: f64 = fit.model.weights.iter().sum();
        prop_assert!((wsum - 1.0).abs() < 1e-9);
    }
}
