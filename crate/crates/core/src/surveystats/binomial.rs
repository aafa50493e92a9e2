//! Exact binomial inference for paired-preference counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surveystats::special::{beta_inv, log_gamma, normal_quantile};
use crate::surveystats::TestResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    Two,
    LowerOne,
}

fn check_counts(k: u64, n: u64) -> Result<()> {
    if n == 0 || k > n {
        return Err(Error::Domain(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    Ok(())
}

/// ln C(n, k). Exact integer arithmetic while the coefficient fits in the
/// f64 mantissa, log-gamma beyond that.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 0..k {
        c = c * u128::from(n - j) / u128::from(j + 1);
        if c > 1 << 53 {
            return log_gamma((n + 1) as f64).unwrap()
                - log_gamma((k + 1) as f64).unwrap()
                - log_gamma((n - k + 1) as f64).unwrap();
        }
    }
    (c as f64).ln()
}

/// P(X >= k) for X ~ Binomial(n, p0).
///
/// Terms are formed in log space, scaled by the largest, and added with
/// Neumaier compensation.
pub fn binomial_upper_tail(k: u64, n: u64, p0: f64) -> Result<f64> {
    check_counts(k, n)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!("p0 must lie in (0, 1), got {p0}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let (ln_p, ln_q) = (p0.ln(), (-p0).ln_1p());
    let logs: Vec<f64> = (k..=n)
        .map(|i| ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for l in &logs {
        let t = (l - max).exp();
        let s = sum + t;
        comp += if sum.abs() >= t.abs() {
            (sum - s) + t
        } else {
            (t - s) + sum
        };
        sum = s;
    }
    Ok(((sum + comp).ln() + max).exp().min(1.0))
}

pub fn binom_test_one_sided(k: u64, n: u64, p0: f64) -> Result<TestResult> {
    let p_value = binomial_upper_tail(k, n, p0)?;
    Ok(TestResult {
        statistic: k as f64,
        df: None,
        p_value,
        ci: clopper_pearson(k, n, 0.95, Sidedness::Two)?,
        method: format!("exact binomial, one-sided (H1: p > {p0})"),
    })
}

/// Clopper-Pearson interval for a binomial proportion.
pub fn clopper_pearson(k: u64, n: u64, conf: f64, sided: Sidedness) -> Result<(f64, f64)> {
    check_counts(k, n)?;
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::Domain(format!("confidence must lie in (0, 1), got {conf}")));
    }
    let alpha = 1.0 - conf;
    let (kf, nf) = (k as f64, n as f64);
    let lower = |tail: f64| -> Result<f64> {
        if k == 0 {
            Ok(0.0)
        } else {
            beta_inv(kf, nf - kf + 1.0, tail)
        }
    };
    match sided {
        Sidedness::Two => {
            let lo = lower(alpha / 2.0)?;
            let hi = if k == n {
                1.0
            } else {
                beta_inv(kf + 1.0, nf - kf, 1.0 - alpha / 2.0)?
            };
            Ok((lo, hi))
        }
        Sidedness::LowerOne => Ok((lower(alpha)?, 1.0)),
    }
}

/// Normal-approximation (Wald) interval, clipped to [0, 1].
pub fn wald_interval(k: u64, n: u64, conf: f64) -> Result<(f64, f64)> {
    check_counts(k, n)?;
    let p = k as f64 / n as f64;
    let z = normal_quantile(1.0 - (1.0 - conf) / 2.0)?;
    let half = z * (p * (1.0 - p) / n as f64).sqrt();
    Ok(((p - half).max(0.0), (p + half).min(1.0)))
}
