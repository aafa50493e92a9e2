//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls into the code paths it is used to check.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (0..d).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect())
        .collect()
}

fn binomial_coefficient(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for j in 0..k {
        c = c * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    c
}

/// P(X >= k) for X ~ Binomial(n, p) in exact rational arithmetic. With
/// p = a/b the tail is sum C(n,i) a^i (b-a)^(n-i) over b^n, so only the
/// final division needs a rational.
pub fn exact_upper_tail(k: u64, n: u64, p: &BigRational) -> BigRational {
    let a = p.numer().clone();
    let b = p.denom().clone();
    let c = &b - &a;
    let mut numer = BigInt::zero();
    for i in k..=n {
        numer += binomial_coefficient(n, i)
            * num_traits::pow(a.clone(), i as usize)
            * num_traits::pow(c.clone(), (n - i) as usize);
    }
    BigRational::new(numer, num_traits::pow(b, n as usize))
}

pub fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

/// Clopper-Pearson bounds by bisection on exact binomial tails:
/// lo solves P(X >= k | p) = alpha/2, hi solves P(X <= k | p) = alpha/2.
pub fn clopper_pearson_oracle(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let target = alpha / 2.0;
    let upper_tail = |p: f64, k: u64| to_f64(&exact_upper_tail(k, n, &BigRational::from_float(p).unwrap()));
    let lo = if k == 0 {
        0.0
    } else {
        bisect(|p| upper_tail(p, k) - target)
    };
    let hi = if k == n {
        1.0
    } else {
        // P(X <= k) = 1 - P(X >= k + 1), decreasing in p
        bisect(|p| target - (1.0 - upper_tail(p, k + 1)))
    };
    (lo, hi)
}

/// Root of an increasing function on (0, 1).
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues sorted descending with matching unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n).map(|j| (a[j][j], (0..n).map(|i| v[i][j]).collect())).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs.into_iter().unzip()
}

/// Sample covariance with n - 1 denominator.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

/// Mean distance to the K nearest rows: compute all distances, sort, take K.
pub fn knn_brute_force(reference: &[Vec<f32>], x: &[f64], k: usize) -> f64 {
    let mut d: Vec<f64> = reference
        .iter()
        .map(|r| {
            r.iter()
                .zip(x)
                .map(|(&a, b)| {
                    let diff = b - f64::from(a);
                    diff * diff
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    d.sort_by(f64::total_cmp);
    d[..k].iter().sum::<f64>() / k as f64
}

pub struct ParsedGevk {
    pub version: u32,
    pub n_rows: u64,
    pub dims: u64,
    pub dtype: u8,
    pub row_ids: Vec<String>,
    pub values: Vec<f32>,
}

/// Straight-line reader for the GEVK layout, written against the byte
/// table rather than the library reader.
pub fn reference_read_gevk(bytes: &[u8]) -> ParsedGevk {
    assert_eq!(&bytes[0..4], b"GEVK");
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let n_rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dims = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let dtype = bytes[24];
    let mut at = 25;
    let mut row_ids = Vec::new();
    for _ in 0..n_rows {
        let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        at += 4;
        row_ids.push(String::from_utf8(bytes[at..at + len].to_vec()).unwrap());
        at += len;
    }
    let payload = &bytes[at..];
    assert_eq!(payload.len() as u64, n_rows * dims * 4);
    let values = payload
        .chunks(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ParsedGevk {
        version,
        n_rows,
        dims,
        dtype,
        row_ids,
        values,
    }
}

/// FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Bilinear sample of one channel at output pixel (ox, oy), written out
/// term by term from the half-pixel-centre convention.
pub fn bilinear_oracle(
    pixels: &[u8],
    w: usize,
    h: usize,
    out_w: usize,
    out_h: usize,
    ox: usize,
    oy: usize,
    c: usize,
) -> f64 {
    let sx = ((ox as f64 + 0.5) * w as f64 / out_w as f64 - 0.5).max(0.0);
    let sy = ((oy as f64 + 0.5) * h as f64 / out_h as f64 - 0.5).max(0.0);
    let x0 = (sx.floor() as usize).min(w - 1);
    let y0 = (sy.floor() as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = if x1 == x0 { 0.0 } else { sx - x0 as f64 };
    let fy = if y1 == y0 { 0.0 } else { sy - y0 as f64 };
    let p = |x: usize, y: usize| f64::from(pixels[(y * w + x) * 3 + c]);
    let v = p(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + p(x1, y0) * fx * (1.0 - fy)
        + p(x0, y1) * (1.0 - fx) * fy
        + p(x1, y1) * fx * fy;
    v / 255.0
}

/// Published Table 5 counts: successes out of 33 per image pair.
pub const TABLE5_SUCCESSES: [u64; 6] = [33, 26, 29, 30, 27, 28];
pub const TABLE5_N: u64 = 33;
/// Published per-pair 95% intervals, in percent.
pub const TABLE5_CI: [(f64, f64); 6] = [
    (89.4, 100.0),
    (60.3, 91.3),
    (71.8, 96.6),
    (75.7, 98.1),
    (64.5, 93.0),
    (67.5, 95.2),
];

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Runs EM on `datasets` random datasets (n <= 60, d <= 4, K <= 3) and
/// checks the trace is non-decreasing within `slack`; K = 1 fits are
/// compared against the closed-form MLE. Returns the number of fits checked.
pub fn em_property_suite(datasets: usize, slack: f64, mle_tol: f64) -> Result<usize, String> {
    use geneval::metrics::giqa::gmm::fit_rows;
    use geneval::metrics::giqa::EmOptions;

    let mut r = rng(2024);
    let mut checked = 0;
    for case in 0..datasets {
        let n = r.gen_range(8..=60usize);
        let d = r.gen_range(1..=4usize);
        let k = r.gen_range(1..=3usize);
        let shift: Vec<f64> = (0..k).map(|_| r.gen_range(-5.0..5.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..d).map(|_| shift[i % k] + r.gen_range(-1.0..1.0)).collect())
            .collect();
        let opts = EmOptions {
            components: k,
            max_iter: 200,
            tol: 1e-10,
            seed: case as u64,
        };
        let fit = fit_rows(&rows, &opts).map_err(|e| format!("case {case}: {e}"))?;
        for w in fit.log_likelihood.windows(2) {
            if w[1] < w[0] - slack {
                return Err(format!(
                    "case {case} (n={n}, d={d}, K={k}): log-likelihood fell {} -> {}",
                    w[0], w[1]
                ));
            }
        }
        checked += 1;

        let one = fit_rows(&rows, &EmOptions { components: 1, ..opts }).map_err(|e| e.to_string())?;
        let m = &one.model;
        for j in 0..d {
            let mean = rows.iter().map(|x| x[j]).sum::<f64>() / n as f64;
            let var = rows.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n as f64;
            if (m.means[0][j] - mean).abs() > mle_tol || (m.variances[0][j] - var).abs() > mle_tol {
                return Err(format!(
                    "case {case}: K=1 fit ({}, {}) differs from MLE ({mean}, {var})",
                    m.means[0][j], m.variances[0][j]
                ));
            }
        }
        if (m.weights[0] - 1.0).abs() > mle_tol {
            return Err(format!("case {case}: K=1 weight {}", m.weights[0]));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Scores 50 random queries against 200 random reference points with the
/// library index and the sort-all oracle; any difference is an error.
pub fn knn_equivalence(k: usize, seed: u64) -> Result<(), String> {
    use geneval::metrics::giqa::{knn_score, KnnIndex};
    use geneval::EmbeddingMatrix;

    let reference = random_rows(200, 6, seed);
    let queries = random_rows(50, 6, seed + 1);
    let matrix = EmbeddingMatrix::from_rows(
        reference
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("r{i}"), r.clone()))
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let stored: Vec<Vec<f32>> = (0..matrix.n_rows()).map(|i| matrix.row(i).to_vec()).collect();
    let index = KnnIndex::new(matrix, k).map_err(|e| e.to_string())?;
    for (qi, q) in queries.iter().enumerate() {
        let got = knn_score(&index, q).map_err(|e| e.to_string())?;
        let want = knn_brute_force(&stored, q, k);
        if got != want {
            return Err(format!("K={k}, query {qi}: {got} != oracle {want}"));
        }
    }
    Ok(())
}

/// Largest relative error of the library upper tail against the exact
/// rational tail over every n <= max_n and every k, at p0 = 1/2 and 3/10.
pub fn binomial_tail_max_rel_error(max_n: u64) -> (f64, String) {
    let p_values = [
        (0.5, half()),
        (0.3, BigRational::new(BigInt::from(3), BigInt::from(10))),
    ];
    let mut worst = (0.0f64, String::new());
    for (p, exact_p) in &p_values {
        for n in 1..=max_n {
            for k in 0..=n {
                let want = to_f64(&exact_upper_tail(k, n, exact_p));
                let got = geneval::surveystats::binomial_upper_tail(k, n, *p).unwrap();
                let rel = ((got - want) / want).abs();
                if rel > worst.0 {
                    worst = (rel, format!("n={n}, k={k}, p={p}"));
                }
            }
        }
    }
    worst
}

/// Largest |I_x(a, b) - q| where x = beta_inv(a, b, q) over a fixed grid.
pub fn beta_inv_round_trip_max_error() -> (f64, String) {
    use geneval::surveystats::{beta_inv, reg_inc_beta};
    let shapes = [0.5, 1.0, 2.0, 5.0, 10.0, 33.0, 100.0];
    let qs = [1e-3, 0.01, 0.025, 0.1, 0.5, 0.9, 0.975, 0.99, 0.999];
    let mut worst = (0.0f64, String::new());
    for &a in &shapes {
        for &b in &shapes {
            for &q in &qs {
                let x = beta_inv(a, b, q).unwrap();
                let err = (reg_inc_beta(a, b, x).unwrap() - q).abs();
                if err > worst.0 {
                    worst = (err, format!("a={a}, b={b}, q={q}"));
                }
            }
        }
    }
    worst
}

/// Smallest exact coverage of the two-sided 95% Clopper-Pearson interval
/// over n <= max_n and p on a 0.05 grid, with the binomial pmf summed
/// directly.
pub fn clopper_pearson_min_coverage(max_n: u64) -> (f64, String) {
    use geneval::surveystats::{clopper_pearson, Sidedness};
    let mut worst = (f64::INFINITY, String::new());
    for n in 1..=max_n {
        let intervals: Vec<(f64, f64)> = (0..=n)
            .map(|k| clopper_pearson(k, n, 0.95, Sidedness::Two).unwrap())
            .collect();
        for step in 0..=20 {
            let p = step as f64 * 0.05;
            let coverage: f64 = (0..=n)
                .filter(|&k| intervals[k as usize].0 <= p && p <= intervals[k as usize].1)
                .map(|k| {
                    binomial_coefficient(n, k).to_f64().unwrap() * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
                })
                .sum();
            if coverage < worst.0 {
                worst = (coverage, format!("n={n}, p={p:.2}"));
            }
        }
    }
    worst
}
