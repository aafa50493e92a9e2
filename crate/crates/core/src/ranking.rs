//! Orientation-aware model comparison: % Quality relative to the best
//! trained variant, change relative to the M0 input baseline, and rank.
//!
//! For higher-better metrics the mean itself is the quality value:
//!
//! ```text
//! % Quality = 100 * mean / mean_best
//! vs Input  = 100 * (mean - mean_M0) / mean_M0
//! ```
//!
//! For lower-cost metrics the cost is `|mean|`:
//!
//! ```text
//! % Quality = 100 * cost_best / cost
//! vs Input  = 100 * (cost_M0 - cost) / cost_M0
//! ```
//!
//! A positive vs Input always means better than the baseline. GMM
//! log-likelihood means are compared as lower-cost magnitudes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::normalize::{id_set_difference, NormalizedSeries};
use crate::metrics::series::mean;
use crate::variant::{Metric, ModelVariantId, Orientation};

const DASH: &str = "—";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub variant: ModelVariantId,
    pub mean: f64,
    /// `|mean|` for lower-cost metrics, the mean itself otherwise.
    pub cost: f64,
    pub pct_quality: Option<f64>,
    pub vs_input: Option<f64>,
    pub rank: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rounding {
    pub mean: usize,
    pub pct_quality: usize,
    pub vs_input: usize,
}

impl Default for Rounding {
    fn default() -> Self {
        Self {
            mean: 4,
            pct_quality: 1,
            vs_input: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparisonReport {
    pub metric: Metric,
    pub orientation: Orientation,
    /// Baseline first, then the trained variants by label.
    pub summaries: Vec<ModelSummary>,
    pub rounding: Rounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Markdown => "md",
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::UnsupportedFormat(other.to_owned())),
        }
    }
}

pub fn to_cost(mean: f64, orientation: Orientation) -> Result<f64> {
    if !mean.is_finite() {
        return Err(Error::Domain(format!("non-finite mean {mean}")));
    }
    match orientation {
        Orientation::HigherBetter => Ok(mean),
        Orientation::LowerCost if mean == 0.0 => Err(Error::Domain("zero mean has no cost under lower_cost".into())),
        Orientation::LowerCost => Ok(mean.abs()),
    }
}

/// Computes % Quality and vs Input for every variant. Ranks are left unset;
/// see [`rank_models`].
pub fn derive_columns(means: &BTreeMap<ModelVariantId, f64>, orientation: Orientation) -> Result<Vec<ModelSummary>> {
    let baseline_mean = *means.get(&ModelVariantId::M0).ok_or(Error::MissingBaseline)?;
    let baseline_cost = to_cost(baseline_mean, orientation)?;
    let candidates: Vec<(ModelVariantId, f64, f64)> = means
        .iter()
        .filter(|(v, _)| !v.is_baseline())
        .map(|(&v, &m)| Ok((v, m, to_cost(m, orientation)?)))
        .collect::<Result<_>>()?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }

    let best_cost = match orientation {
        Orientation::HigherBetter => candidates.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max),
        Orientation::LowerCost => candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min),
    };
    if orientation == Orientation::HigherBetter && best_cost <= 0.0 {
        return Err(Error::Domain(
            "% Quality needs a positive best mean for higher_better metrics".into(),
        ));
    }
    if orientation == Orientation::HigherBetter && baseline_cost == 0.0 {
        return Err(Error::Domain("vs Input is undefined for a zero baseline mean".into()));
    }

    let mut out = vec![ModelSummary {
        variant: ModelVariantId::M0,
        mean: baseline_mean,
        cost: baseline_cost,
        pct_quality: None,
        vs_input: None,
        rank: None,
    }];
    for (variant, mean, cost) in candidates {
        let (pct, vs) = match orientation {
            Orientation::HigherBetter => (
                100.0 * cost / best_cost,
                100.0 * (cost - baseline_cost) / baseline_cost.abs(),
            ),
            Orientation::LowerCost => (100.0 * best_cost / cost, 100.0 * (baseline_cost - cost) / baseline_cost),
        };
        out.push(ModelSummary {
            variant,
            mean,
            cost,
            pct_quality: Some(pct),
            vs_input: Some(vs),
            rank: None,
        });
    }
    Ok(out)
}

/// Ranks trained variants 1..n by descending % Quality; equal values go to
/// the lower label. The baseline stays unranked.
pub fn rank_models(mut summaries: Vec<ModelSummary>) -> Vec<ModelSummary> {
    let mut order: Vec<usize> = summaries
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.variant.is_baseline() && s.pct_quality.is_some())
        .map(|(i, _)| i)
        .collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&summaries[a], &summaries[b]);
        sb.pct_quality
            .unwrap()
            .total_cmp(&sa.pct_quality.unwrap())
            .then(sa.variant.cmp(&sb.variant))
    });
    for s in summaries.iter_mut() {
        s.rank = None;
    }
    for (r, i) in order.into_iter().enumerate() {
        summaries[i].rank = Some(r as u32 + 1);
    }
    summaries
}

pub fn build_report(metric: Metric, means: &BTreeMap<ModelVariantId, f64>) -> Result<ModelComparisonReport> {
    let orientation = metric.report_orientation();
    Ok(ModelComparisonReport {
        metric,
        orientation,
        summaries: rank_models(derive_columns(means, orientation)?),
        rounding: Rounding::default(),
    })
}

/// Rounds half away from zero. Values within 1e-9 of a tie count as ties so
/// binary noise in computed percentages does not flip the printed digit.
pub fn round_half_away(x: f64, places: usize) -> f64 {
    let scale = 10f64.powi(places as i32);
    let scaled = x * scale;
    let frac = scaled.fract().abs();
    let rounded = if (frac - 0.5).abs() < 1e-9 {
        scaled.trunc() + scaled.signum()
    } else {
        scaled.round()
    };
    let out = rounded / scale;
    if out == 0.0 {
        0.0
    } else {
        out
    }
}

fn fixed(x: f64, places: usize) -> String {
    format!("{:.*}", places, round_half_away(x, places))
}

fn group_thousands(s: &str) -> String {
    let (sign, rest) = s.strip_prefix('-').map_or(("", s), |r| ("-", r));
    let (int, frac) = rest.split_once('.').map_or((rest, None), |(i, f)| (i, Some(f)));
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

struct Cells {
    model: String,
    mean: String,
    pct: String,
    vs: String,
    rank: String,
}

fn cells(s: &ModelSummary, r: &Rounding) -> Cells {
    Cells {
        model: s.variant.label().to_owned(),
        mean: group_thousands(&fixed(s.mean, r.mean)),
        pct: s
            .pct_quality
            .map_or(DASH.to_owned(), |p| format!("{}%", fixed(p, r.pct_quality))),
        vs: s.vs_input.map_or(DASH.to_owned(), |v| {
            let v = round_half_away(v, r.vs_input);
            format!("{}{:.*}%", if v >= 0.0 { "+" } else { "" }, r.vs_input, v)
        }),
        rank: s.rank.map_or(DASH.to_owned(), |n| format!("#{n}")),
    }
}

pub fn emit_report(report: &ModelComparisonReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::from("| Model | Mean | % Quality | vs Input | Rank |\n");
            out.push_str("|-------|------|-----------|----------|------|\n");
            for s in &report.summaries {
                let c = cells(s, &report.rounding);
                let _ = writeln!(out, "| {} | {} | {} | {} | {} |", c.model, c.mean, c.pct, c.vs, c.rank);
            }
            Ok(out)
        }
        ReportFormat::Csv => {
            // Plain numbers for downstream tools; the baseline row leaves the
            // derived columns empty.
            let r = &report.rounding;
            let mut out = String::from("model,mean,pct_quality,vs_input,rank\n");
            for s in &report.summaries {
                let opt = |v: Option<f64>, places| v.map_or(String::new(), |v| fixed(v, places));
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.variant,
                    fixed(s.mean, r.mean),
                    opt(s.pct_quality, r.pct_quality),
                    opt(s.vs_input, r.vs_input),
                    s.rank.map_or(String::new(), |n| n.to_string())
                );
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            Ok(text)
        }
    }
}

pub fn parse_report_json(text: &str) -> Result<ModelComparisonReport> {
    Ok(serde_json::from_str(text)?)
}

/// Per-variant, per-metric averages of normalized scores.
pub type AverageTable = BTreeMap<ModelVariantId, BTreeMap<Metric, f64>>;

/// Averages normalized scores per variant and metric and renders them as
/// `variant,metric,mean_normalized` CSV.
pub fn average_normalized(
    series_by_metric: &BTreeMap<Metric, Vec<NormalizedSeries>>,
) -> Result<(AverageTable, String)> {
    let mut table: AverageTable = BTreeMap::new();
    for (metric, series) in series_by_metric {
        let sets = series.iter().map(|s| {
            (
                s.variant,
                s.points.keys().map(String::as_str).collect::<BTreeSet<&str>>(),
            )
        });
        if let Some(diff) = id_set_difference(sets) {
            return Err(Error::MismatchedImageIds(format!("{metric}: {diff}")));
        }
        for s in series {
            if s.points.values().any(|p| !(0.0..=1.0).contains(&p.normalized)) {
                return Err(Error::InvalidSeries(format!(
                    "{metric}/{}: normalized values must lie in [0, 1]",
                    s.variant
                )));
            }
            table
                .entry(s.variant)
                .or_default()
                .insert(*metric, mean(s.normalized_values())?);
        }
    }
    let mut csv = String::from("variant,metric,mean_normalized\n");
    for (variant, metrics) in &table {
        for (metric, value) in metrics {
            let _ = writeln!(csv, "{variant},{metric},{value}");
        }
    }
    Ok((table, csv))
}
