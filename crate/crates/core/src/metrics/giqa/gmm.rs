//! Diagonal-covariance Gaussian mixture fitted by expectation-maximization.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurestore::EmbeddingMatrix;

/// Covariance floor as a fraction of the mean per-coordinate variance.
pub const FLOOR_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Diagonal of each component covariance.
    pub variances: Vec<Vec<f64>>,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub components: usize,
    pub max_iter: usize,
    /// Stop once the mean per-sample log-likelihood improves by less.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            components: 8,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Total data log-likelihood after initialization and after each M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn log_component_densities(&self, x: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = if self.weights[k] > 0.0 {
                self.weights[k].ln() + log_normal_diag(x, &self.means[k], &self.variances[k])
            } else {
                f64::NEG_INFINITY
            };
        }
    }
}

fn log_normal_diag(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
        let diff = xi - mi;
        acc += (2.0 * PI * vi).ln() + diff * diff / vi;
    }
    -0.5 * acc
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log sum_k w_k N(x; mu_k, diag(var_k))`.
pub fn gmm_loglik(model: &GmmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dims() {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: x.len(),
        });
    }
    let mut scratch = vec![0.0; model.components()];
    model.log_component_densities(x, &mut scratch);
    Ok(log_sum_exp(&scratch))
}

pub fn gmm_fit(features: &EmbeddingMatrix, components: usize, max_iter: usize, tol: f64, seed: u64) -> Result<GmmFit> {
    let rows = super::pca::rows_f64(features);
    fit_rows(
        &rows,
        &EmOptions {
            components,
            max_iter,
            tol,
            seed,
        },
    )
}

pub fn fit_rows(rows: &[Vec<f64>], opts: &EmOptions) -> Result<GmmFit> {
    let n = rows.len();
    let k = opts.components;
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyComponents { k, n });
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be > 0".into()));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("rows must share a non-zero dimension".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }

    let (_, global_var) = moments(rows);
    let mean_var = global_var.iter().sum::<f64>() / d as f64;
    let floor = if mean_var > 0.0 {
        FLOOR_FRACTION * mean_var
    } else {
        FLOOR_FRACTION
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut model = GmmModel {
        weights: vec![1.0 / k as f64; k],
        means: kmeans_pp(rows, k, &mut rng),
        variances: vec![global_var.iter().map(|v| v.max(floor)).collect(); k],
        floor,
    };

    let mut resp = vec![vec![0.0; k]; n];
    let mut trace = vec![e_step(&model, rows, &mut resp)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        m_step(&mut model, rows, &resp);
        iterations += 1;
        let ll = e_step(&model, rows, &mut resp);
        let prev = *trace.last().expect("non-empty");
        trace.push(ll);
        if (ll - prev) / (n as f64) < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

fn moments(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

/// Seeds centres with k-means++: each new centre is drawn with probability
/// proportional to squared distance from the nearest existing centre.
fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = rows[pick].clone();
        for (slot, r) in nearest.iter_mut().zip(rows) {
            *slot = slot.min(sq_dist(r, &c));
        }
        centers.push(c);
    }
    centers
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fills responsibilities and returns the total log-likelihood.
fn e_step(model: &GmmModel, rows: &[Vec<f64>], resp: &mut [Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (x, r) in rows.iter().zip(resp.iter_mut()) {
        model.log_component_densities(x, r);
        let lse = log_sum_exp(r);
        total += lse;
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
    }
    total
}

fn m_step(model: &mut GmmModel, rows: &[Vec<f64>], resp: &[Vec<f64>]) {
    let n = rows.len();
    let d = rows[0].len();
    let k = model.components();
    let mut mass = vec![0.0; k];
    for r in resp {
        for (m, v) in mass.iter_mut().zip(r) {
            *m += v;
        }
    }
    for c in 0..k {
        // A component that lost all mass keeps its parameters at zero weight.
        if mass[c] <= f64::MIN_POSITIVE * n as f64 {
            continue;
        }
        let mut mean = vec![0.0; d];
        for (x, r) in rows.iter().zip(resp) {
            for (m, xi) in mean.iter_mut().zip(x) {
                *m += r[c] * xi;
            }
        }
        mean.iter_mut().for_each(|m| *m /= mass[c]);
        let mut var = vec![0.0; d];
        for (x, r) in rows.iter().zip(resp) {
            for ((s, xi), mi) in var.iter_mut().zip(x).zip(&mean) {
                *s += r[c] * (xi - mi) * (xi - mi);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / mass[c]).max(model.floor));
        model.means[c] = mean;
        model.variances[c] = var;
    }
    let total: f64 = mass.iter().sum();
    model.weights = mass.iter().map(|m| m / total).collect();
}
