use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surveystats::special::{student_t_sf, student_t_upper_quantile};
use crate::surveystats::TestResult;

pub const LIKERT_MIN: f64 = 1.0;
pub const LIKERT_MAX: f64 = 7.0;
pub const LIKERT_MIDPOINT: f64 = 4.0;

/// Summary of 1-7 Likert ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub midpoint: f64,
}

impl LikertSummary {
    pub fn new(mean: f64, sd: f64, n: usize) -> Result<Self> {
        if !(LIKERT_MIN..=LIKERT_MAX).contains(&mean) {
            return Err(Error::Domain(format!("mean {mean} outside the 1-7 scale")));
        }
        if sd.is_nan() || sd < 0.0 || n < 2 {
            return Err(Error::Domain(format!("need sd >= 0 and n >= 2, got sd={sd}, n={n}")));
        }
        Ok(Self {
            mean,
            sd,
            n,
            scale_min: LIKERT_MIN,
            scale_max: LIKERT_MAX,
            midpoint: LIKERT_MIDPOINT,
        })
    }

    /// Sample mean and standard deviation (n - 1 denominator).
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 ratings, got {n}")));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        Self::new(mean, (ss / (n - 1) as f64).sqrt(), n)
    }
}

/// One-sample t-test of H1: mean > mu0. The interval is the two-sided 95%
/// confidence interval for the mean, in scale units.
pub fn one_sample_t(summary: &LikertSummary, mu0: f64) -> Result<TestResult> {
    t_test_raw(summary.mean, summary.sd, summary.n, mu0)
}

pub(crate) fn t_test_raw(mean: f64, sd: f64, n: usize, mu0: f64) -> Result<TestResult> {
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::Domain("degenerate sample: sd = 0".into()));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    let se = sd / (n as f64).sqrt();
    let t = (mean - mu0) / se;
    let df = (n - 1) as f64;
    let crit = student_t_upper_quantile(0.025, df)?;
    Ok(TestResult {
        statistic: t,
        df: Some(df),
        p_value: student_t_sf(t, df)?,
        ci: (mean - crit * se, mean + crit * se),
        method: format!("one-sample t-test, one-sided (H1: mean > {mu0})"),
    })
}
