//! Exact statistics for paired-preference surveys: one-sided binomial
//! tests, Clopper-Pearson intervals, one-sample t-tests on Likert ratings,
//! and the CSV ingestion that feeds them.

pub mod binomial;
pub mod special;
pub mod survey;
pub mod ttest;

use serde::{Deserialize, Serialize};

pub use binomial::{binom_test_one_sided, binomial_upper_tail, clopper_pearson, wald_interval, Sidedness};
pub use special::{beta_inv, log_gamma, reg_inc_beta, student_t_sf};
pub use survey::{
    aggregate_preferences, analyze_pairs, build_survey_report, parse_survey_csv, parse_survey_str, survey_markdown,
    PairOutcome, PreferenceAggregate, SurveyData, SurveyReport,
};
pub use ttest::{one_sample_t, LikertSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_value: f64,
    pub ci: (f64, f64),
    pub method: String,
}
