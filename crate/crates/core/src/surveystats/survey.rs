//! Survey ingestion, preference aggregation and the per-pair report.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::round_half_away;
use crate::surveystats::binomial::{binom_test_one_sided, clopper_pearson, wald_interval, Sidedness};
use crate::surveystats::ttest::{one_sample_t, LikertSummary, LIKERT_MIDPOINT};
use crate::surveystats::TestResult;

pub const SURVEY_HEADER: [&str; 6] = [
    "respondent_id",
    "pair_id",
    "choice",
    "confidence",
    "helpfulness",
    "role",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub n: u64,
    /// Respondents choosing the optimized image.
    pub k: u64,
}

impl PairOutcome {
    pub fn new(pair_id: impl Into<String>, k: u64, n: u64) -> Result<Self> {
        if n == 0 || k > n {
            return Err(Error::Domain(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
        }
        Ok(Self {
            pair_id: pair_id.into(),
            n,
            k,
        })
    }

    pub fn proportion(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceAggregate {
    pub overall: PairOutcome,
    /// Overall percentage rounded to one decimal.
    pub overall_percent: f64,
    /// Per-pair percentages rounded to whole numbers.
    pub per_pair_percent: Vec<(String, f64)>,
}

pub fn aggregate_preferences(pairs: &[PairOutcome]) -> Result<PreferenceAggregate> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs to aggregate".into()));
    }
    let k = pairs.iter().map(|p| p.k).sum();
    let n = pairs.iter().map(|p| p.n).sum();
    let overall = PairOutcome::new("overall", k, n)?;
    Ok(PreferenceAggregate {
        overall_percent: round_half_away(100.0 * overall.proportion(), 1),
        per_pair_percent: pairs
            .iter()
            .map(|p| (p.pair_id.clone(), round_half_away(100.0 * p.proportion(), 0)))
            .collect(),
        overall,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyData {
    pub pairs: Vec<PairOutcome>,
    /// One confidence rating per accepted row that carried one.
    pub confidence: Vec<f64>,
    /// One helpfulness rating per respondent (first non-empty value).
    pub helpfulness: Vec<f64>,
    pub diagnostics: Vec<RowDiagnostic>,
    pub accepted_rows: usize,
}

pub fn parse_survey_csv(source: &Path) -> Result<SurveyData> {
    let text = fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(source.to_path_buf()));
    }
    parse_survey_str(&text)
}

/// Parses survey rows. Malformed rows become diagnostics; the rest are kept.
pub fn parse_survey_str(text: &str) -> Result<SurveyData> {
    if text.trim().is_empty() {
        return Err(Error::EmptyFile("<input>".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::MissingHeader(format!("{} ({e})", SURVEY_HEADER.join(","))))?
        .clone();
    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(SURVEY_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingHeader(SURVEY_HEADER.join(",")))?;
    }
    let [c_resp, c_pair, c_choice, c_conf, c_help, _c_role] = columns;

    let mut tallies: BTreeMap<PairKey, (u64, u64)> = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut helpful_by_respondent: BTreeMap<String, f64> = BTreeMap::new();
    let mut data = SurveyData {
        pairs: Vec::new(),
        confidence: Vec::new(),
        helpfulness: Vec::new(),
        diagnostics: Vec::new(),
        accepted_rows: 0,
    };

    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                data.diagnostics.push(RowDiagnostic {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let mut reject = |message: String| {
            log::warn!("survey line {line}: {message}");
            data.diagnostics.push(RowDiagnostic { line, message });
        };
        if record.len() != headers.len() {
            reject(format!("expected {} fields, found {}", headers.len(), record.len()));
            continue;
        }
        let respondent = &record[c_resp];
        let pair = &record[c_pair];
        if respondent.is_empty() || pair.is_empty() {
            reject("empty respondent_id or pair_id".into());
            continue;
        }
        let chose_optimized = match record[c_choice].to_ascii_lowercase().as_str() {
            "optimized" => true,
            "original" => false,
            other => {
                reject(format!("choice `{other}` is neither `optimized` nor `original`"));
                continue;
            }
        };
        let confidence = match likert(&record[c_conf]) {
            Ok(v) => v,
            Err(m) => {
                reject(format!("confidence {m}"));
                continue;
            }
        };
        let helpfulness = match likert(&record[c_help]) {
            Ok(v) => v,
            Err(m) => {
                reject(format!("helpfulness {m}"));
                continue;
            }
        };
        if !seen.insert((respondent.to_owned(), pair.to_owned())) {
            reject(format!("duplicate answer from `{respondent}` for pair `{pair}`"));
            continue;
        }

        let tally = tallies.entry(PairKey::new(pair)).or_insert((0, 0));
        tally.1 += 1;
        if chose_optimized {
            tally.0 += 1;
        }
        if let Some(c) = confidence {
            data.confidence.push(c);
        }
        if let Some(h) = helpfulness {
            helpful_by_respondent.entry(respondent.to_owned()).or_insert(h);
        }
        data.accepted_rows += 1;
    }

    data.pairs = tallies
        .into_iter()
        .map(|(key, (k, n))| PairOutcome { pair_id: key.raw, n, k })
        .collect();
    data.helpfulness = helpful_by_respondent.into_values().collect();
    Ok(data)
}

fn likert(cell: &str) -> std::result::Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<u8>() {
        Ok(v @ 1..=7) => Ok(Some(f64::from(v))),
        Ok(v) => Err(format!("{v} outside the 1-7 scale")),
        Err(_) => Err(format!("`{cell}` is not an integer rating")),
    }
}

/// Orders pair ids naturally, so "pair10" follows "pair9".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct PairKey {
    prefix: String,
    number: Option<u64>,
    raw: String,
}

impl PairKey {
    fn new(raw: &str) -> Self {
        let split = raw.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        Self {
            prefix: raw[..split].to_owned(),
            number: raw[split..].parse().ok(),
            raw: raw.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair_id: String,
    pub k: u64,
    pub n: u64,
    pub percent: f64,
    pub p_value: f64,
    pub ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub k: u64,
    pub n: u64,
    pub percent: f64,
    pub p_value: f64,
    pub ci_two_sided: (f64, f64),
    pub ci_lower_one_sided: (f64, f64),
    /// Normal-approximation lower bound, upper clipped to 1.
    pub ci_normal_lower: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertAnalysis {
    pub summary: LikertSummary,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub pairs: Vec<PairRow>,
    pub overall: OverallRow,
    pub confidence: Option<LikertAnalysis>,
    pub helpfulness: Option<LikertAnalysis>,
    pub diagnostics: Vec<RowDiagnostic>,
}

pub fn analyze_pairs(pairs: &[PairOutcome], conf: f64) -> Result<(Vec<PairRow>, OverallRow)> {
    let agg = aggregate_preferences(pairs)?;
    let rows = pairs
        .iter()
        .map(|p| {
            Ok(PairRow {
                pair_id: p.pair_id.clone(),
                k: p.k,
                n: p.n,
                percent: 100.0 * p.proportion(),
                p_value: binom_test_one_sided(p.k, p.n, 0.5)?.p_value,
                ci: clopper_pearson(p.k, p.n, conf, Sidedness::Two)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (k, n) = (agg.overall.k, agg.overall.n);
    let overall = OverallRow {
        k,
        n,
        percent: 100.0 * agg.overall.proportion(),
        p_value: binom_test_one_sided(k, n, 0.5)?.p_value,
        ci_two_sided: clopper_pearson(k, n, conf, Sidedness::Two)?,
        ci_lower_one_sided: clopper_pearson(k, n, conf, Sidedness::LowerOne)?,
        ci_normal_lower: (wald_interval(k, n, conf)?.0, 1.0),
    };
    Ok((rows, overall))
}

fn likert_analysis(samples: &[f64]) -> Option<LikertAnalysis> {
    let summary = LikertSummary::from_samples(samples).ok()?;
    let test = one_sample_t(&summary, LIKERT_MIDPOINT).ok()?;
    Some(LikertAnalysis { summary, test })
}

pub fn build_survey_report(data: &SurveyData) -> Result<SurveyReport> {
    let (pairs, overall) = analyze_pairs(&data.pairs, 0.95)?;
    Ok(SurveyReport {
        pairs,
        overall,
        confidence: likert_analysis(&data.confidence),
        helpfulness: likert_analysis(&data.helpfulness),
        diagnostics: data.diagnostics.clone(),
    })
}

/// APA-style p-value: `< .001` below the threshold, otherwise three
/// decimals without the leading zero.
pub fn format_p(p: f64, threshold: f64) -> String {
    if p < threshold {
        let t = format!("{threshold}");
        return format!("< {}", t.trim_start_matches('0'));
    }
    let s = format!("{:.3}", round_half_away(p, 3));
    s.strip_prefix('0').map(str::to_owned).unwrap_or(s)
}

/// A proportion as a percentage with one decimal; the endpoints print as
/// whole numbers.
pub fn format_bound(x: f64) -> String {
    let v = round_half_away(100.0 * x, 1);
    if v == 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn format_interval(ci: (f64, f64)) -> String {
    format!("[{}, {}]", format_bound(ci.0), format_bound(ci.1))
}

fn pair_label(id: &str) -> String {
    if id.chars().all(|c| c.is_ascii_digit()) {
        format!("Pair {id}")
    } else {
        id.to_owned()
    }
}

pub fn survey_markdown(report: &SurveyReport) -> String {
    let mut out = String::from(
        "| Image Pair | Percent Choosing Optimized | Successes | p-value | 95% CI |\n\
         |------------|----------------------------|-----------|---------|--------|\n",
    );
    for row in &report.pairs {
        let _ = writeln!(
            out,
            "| {} | {:.0}% | {} | {} | {} |",
            pair_label(&row.pair_id),
            round_half_away(row.percent, 0),
            row.k,
            format_p(row.p_value, 0.001),
            format_interval(row.ci)
        );
    }
    let o = &report.overall;
    let _ = writeln!(
        out,
        "| Overall | {:.1}% | {}/{} | {} | {} |",
        round_half_away(o.percent, 1),
        o.k,
        o.n,
        format_p(o.p_value, 0.001),
        format_interval(o.ci_two_sided)
    );
    let _ = writeln!(
        out,
        "\nOverall 95% interval by method: two-sided Clopper-Pearson {}; \
         one-sided Clopper-Pearson {}; normal approximation (lower bound) {}.",
        format_interval(o.ci_two_sided),
        format_interval(o.ci_lower_one_sided),
        format_interval(o.ci_normal_lower)
    );
    for (name, analysis) in [("Confidence", &report.confidence), ("Helpfulness", &report.helpfulness)] {
        if let Some(a) = analysis {
            let _ = writeln!(
                out,
                "{name}: M = {:.2}, SD = {:.2}, n = {}; t({}) = {:.2}, one-sided p {}.",
                a.summary.mean,
                a.summary.sd,
                a.summary.n,
                a.test.df.unwrap_or(0.0),
                a.test.statistic,
                match format_p(a.test.p_value, 0.0001) {
                    s if s.starts_with('<') => s,
                    s => format!("= {s}"),
                }
            );
        }
    }
    if !report.diagnostics.is_empty() {
        let _ = writeln!(out, "\n{} malformed row(s) skipped.", report.diagnostics.len());
    }
    out
}
