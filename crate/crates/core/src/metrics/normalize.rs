//! Mapping raw score series onto a shared 0-1 scale.
//!
//! Normalized values are oriented so that 1 is always the best end: for
//! lower-cost series the smallest raw value maps to 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::series::ScoreSeries;
use crate::variant::{Metric, ModelVariantId, Orientation};

type ScopeMap = Box<dyn Fn(&str, f64) -> f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    #[default]
    GlobalMinMax,
    PerImageMinMax,
    DivideByGlobalMax,
    FixedBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormalizationStrategy {
    pub kind: NormalizationKind,
    #[serde(default)]
    pub bounds: Option<(f64, f64)>,
}

impl NormalizationStrategy {
    pub fn new(kind: NormalizationKind) -> Self {
        Self { kind, bounds: None }
    }

    pub fn fixed(lo: f64, hi: f64) -> Self {
        Self {
            kind: NormalizationKind::FixedBounds,
            bounds: Some((lo, hi)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.bounds) {
            (NormalizationKind::FixedBounds, Some((lo, hi))) if lo < hi => Ok(()),
            (NormalizationKind::FixedBounds, _) => Err(Error::InvalidConfig(
                "fixed_bounds normalization needs bounds with lo < hi".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    pub metric: Metric,
    pub variant: ModelVariantId,
    pub orientation: Orientation,
    pub points: BTreeMap<String, NormalizedPoint>,
}

impl NormalizedSeries {
    pub fn normalized_values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.points.values().map(|p| p.normalized)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub series: Vec<NormalizedSeries>,
    /// One message per degenerate scope that was mapped to 0.5.
    pub warnings: Vec<String>,
}

pub fn normalize_scores(all_series: &[ScoreSeries], strategy: &NormalizationStrategy) -> Result<Normalization> {
    strategy.validate()?;
    let first = all_series.first().ok_or(Error::EmptySeries)?;
    let (metric, orientation) = (first.metric, first.orientation);
    for s in all_series {
        if s.metric != metric || s.orientation != orientation {
            return Err(Error::InvalidSeries(format!(
                "cannot normalize {} ({:?}) together with {} ({:?})",
                s.metric, s.orientation, metric, orientation
            )));
        }
        if s.is_empty() {
            return Err(Error::EmptySeries);
        }
    }

    let mut warnings = Vec::new();
    let lower = orientation == Orientation::LowerCost;
    let pooled = || all_series.iter().flat_map(|s| s.per_image.values().copied());
    let pooled_min = pooled().fold(f64::INFINITY, f64::min);
    let pooled_max = pooled().fold(f64::NEG_INFINITY, f64::max);

    // Per-scope mapping from raw value to [0, 1], best end at 1.
    let map: ScopeMap = match strategy.kind {
        NormalizationKind::GlobalMinMax => {
            if pooled_max == pooled_min {
                warnings.push(format!("{metric}: all pooled values equal {pooled_min}; mapped to 0.5"));
            }
            Box::new(move |_, x| min_max(x, pooled_min, pooled_max, lower))
        }
        NormalizationKind::PerImageMinMax => {
            let mut scopes: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
            for s in all_series {
                for (id, &v) in &s.per_image {
                    let e = scopes.entry(id).or_insert((v, v));
                    e.0 = e.0.min(v);
                    e.1 = e.1.max(v);
                }
            }
            for (id, (lo, hi)) in &scopes {
                if lo == hi {
                    warnings.push(format!(
                        "{metric}: image `{id}` is constant across variants; mapped to 0.5"
                    ));
                }
            }
            let scopes: BTreeMap<String, (f64, f64)> = scopes.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
            Box::new(move |id, x| {
                let (lo, hi) = scopes[id];
                min_max(x, lo, hi, lower)
            })
        }
        NormalizationKind::DivideByGlobalMax => {
            if pooled_min < 0.0 {
                return Err(Error::InvalidSeries(format!(
                    "divide_by_global_max needs non-negative scores; {metric} has minimum {pooled_min}"
                )));
            }
            let degenerate = if lower { pooled_min == 0.0 } else { pooled_max == 0.0 };
            if degenerate {
                warnings.push(format!("{metric}: scale reference is zero; mapped to 0.5"));
                Box::new(|_, _| 0.5)
            } else if lower {
                Box::new(move |_, x| pooled_min / x)
            } else {
                Box::new(move |_, x| x / pooled_max)
            }
        }
        NormalizationKind::FixedBounds => {
            let (lo, hi) = strategy.bounds.expect("validated");
            Box::new(move |_, x| min_max(x.clamp(lo, hi), lo, hi, lower))
        }
    };

    for w in &warnings {
        log::warn!("{w}");
    }

    let series = all_series
        .iter()
        .map(|s| NormalizedSeries {
            metric,
            variant: s.variant,
            orientation,
            points: s
                .per_image
                .iter()
                .map(|(id, &raw)| {
                    let normalized = map(id, raw).clamp(0.0, 1.0);
                    (id.clone(), NormalizedPoint { raw, normalized })
                })
                .collect(),
        })
        .collect();
    Ok(Normalization { series, warnings })
}

fn min_max(x: f64, lo: f64, hi: f64, lower: bool) -> f64 {
    if hi == lo {
        return 0.5;
    }
    let t = (x - lo) / (hi - lo);
    if lower {
        1.0 - t
    } else {
        t
    }
}

/// Renders series as `image_id,variant,raw,normalized`, sorted by variant
/// then image id.
pub fn series_to_csv(series: &[NormalizedSeries]) -> Result<String> {
    let mut sorted: Vec<&NormalizedSeries> = series.iter().collect();
    sorted.sort_by_key(|s| s.variant);
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    out.write_record(["image_id", "variant", "raw", "normalized"])
        .map_err(csv_err)?;
    for s in sorted {
        for (id, p) in &s.points {
            out.write_record([
                id.as_str(),
                s.variant.label(),
                &p.raw.to_string(),
                &p.normalized.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = out.into_inner().map_err(|e| Error::InvalidSeries(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV built from UTF-8"))
}

/// Parses the CSV produced by [`series_to_csv`] back into series.
pub fn series_from_csv(text: &str, metric: Metric) -> Result<Vec<NormalizedSeries>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_err)?.clone();
    let expected = ["image_id", "variant", "raw", "normalized"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MissingHeader(expected.join(",")));
    }
    let mut by_variant: BTreeMap<ModelVariantId, BTreeMap<String, NormalizedPoint>> = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidSeries(format!("line {line}: bad number `{s}`")))
        };
        let variant: ModelVariantId = row[1].parse()?;
        by_variant.entry(variant).or_default().insert(
            row[0].to_owned(),
            NormalizedPoint {
                raw: num(&row[2])?,
                normalized: num(&row[3])?,
            },
        );
    }
    Ok(by_variant
        .into_iter()
        .map(|(variant, points)| NormalizedSeries {
            metric,
            variant,
            orientation: metric.series_orientation(),
            points,
        })
        .collect())
}

/// Image ids present in some but not all series.
pub(crate) fn id_set_difference<'a>(sets: impl Iterator<Item = (ModelVariantId, BTreeSet<&'a str>)>) -> Option<String> {
    let sets: Vec<_> = sets.collect();
    let union: BTreeSet<&str> = sets.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    let mut problems = Vec::new();
    for (variant, ids) in &sets {
        let missing: Vec<&str> = union.difference(ids).copied().collect();
        if !missing.is_empty() {
            problems.push(format!("{variant} lacks [{}]", missing.join(", ")));
        }
    }
    (!problems.is_empty()).then(|| problems.join("; "))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidSeries(format!("CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(variant: ModelVariantId, metric: Metric, values: &[f64]) -> ScoreSeries {
        let map = values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("img{i}"), *v))
            .collect();
        ScoreSeries::new(metric, variant, map).unwrap()
    }

    fn normalized(n: &Normalization, variant_idx: usize) -> Vec<f64> {
        n.series[variant_idx].normalized_values().collect()
    }

    #[test]
    fn global_min_max_two_values() {
        let s = [series(ModelVariantId::M0, Metric::Clip, &[2.0, 4.0])];
        let n = normalize_scores(&s, &NormalizationStrategy::default()).unwrap();
        assert_eq!(normalized(&n, 0), vec![0.0, 1.0]);
        assert!(n.warnings.is_empty());
    }

    #[test]
    fn global_min_max_pooled_across_variants() {
        let s = [
            series(ModelVariantId::M0, Metric::Clip, &[1.0, 2.0]),
            series(ModelVariantId::M1, Metric::Clip, &[3.0, 5.0]),
        ];
        let n = normalize_scores(&s, &NormalizationStrategy::default()).unwrap();
        assert_eq!(normalized(&n, 0), vec![0.0, 0.25]);
        assert_eq!(normalized(&n, 1), vec![0.5, 1.0]);
    }

    #[test]
    fn constant_scope_maps_to_half_with_warning() {
        let s = [series(ModelVariantId::M0, Metric::Clip, &[3.0, 3.0, 3.0])];
        for kind in [NormalizationKind::GlobalMinMax, NormalizationKind::PerImageMinMax] {
            let n = normalize_scores(&s, &NormalizationStrategy::new(kind)).unwrap();
            assert!(normalized(&n, 0).iter().all(|&v| v == 0.5));
            assert!(!n.warnings.is_empty());
        }
    }

    #[test]
    fn lower_cost_flips_so_best_is_one() {
        let s = [series(ModelVariantId::M1, Metric::GiqaKnn, &[8.0, 10.0, 9.0])];
        let n = normalize_scores(&s, &NormalizationStrategy::default()).unwrap();
        assert_eq!(normalized(&n, 0), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn per_image_scope() {
        let s = [
            series(ModelVariantId::M0, Metric::Clip, &[1.0, 10.0]),
            series(ModelVariantId::M1, Metric::Clip, &[3.0, 20.0]),
        ];
        let n = normalize_scores(&s, &NormalizationStrategy::new(NormalizationKind::PerImageMinMax)).unwrap();
        assert_eq!(normalized(&n, 0), vec![0.0, 0.0]);
        assert_eq!(normalized(&n, 1), vec![1.0, 1.0]);
    }

    #[test]
    fn divide_by_max_and_fixed_bounds() {
        let s = [series(ModelVariantId::M0, Metric::Clip, &[10.0, 40.0])];
        let n = normalize_scores(&s, &NormalizationStrategy::new(NormalizationKind::DivideByGlobalMax)).unwrap();
        assert_eq!(normalized(&n, 0), vec![0.25, 1.0]);

        let n = normalize_scores(&s, &NormalizationStrategy::fixed(0.0, 20.0)).unwrap();
        assert_eq!(normalized(&n, 0), vec![0.5, 1.0]);

        let neg = [series(ModelVariantId::M0, Metric::GiqaGmm, &[-5.0])];
        assert!(normalize_scores(&neg, &NormalizationStrategy::new(NormalizationKind::DivideByGlobalMax)).is_err());
        assert!(NormalizationStrategy::fixed(1.0, 1.0).validate().is_err());
    }

    #[test]
    fn mixed_metrics_rejected() {
        let s = [
            series(ModelVariantId::M0, Metric::Clip, &[1.0]),
            series(ModelVariantId::M1, Metric::GiqaKnn, &[1.0]),
        ];
        assert!(normalize_scores(&s, &NormalizationStrategy::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = [
            series(ModelVariantId::M1, Metric::Clip, &[30.5, 31.25]),
            series(ModelVariantId::M0, Metric::Clip, &[29.0, 28.125]),
        ];
        let n = normalize_scores(&s, &NormalizationStrategy::default()).unwrap();
        let text = series_to_csv(&n.series).unwrap();
        assert!(text.starts_with("image_id,variant,raw,normalized\nimg0,M0,29,"));
        assert!(!text.contains('\r'));
        let back = series_from_csv(&text, Metric::Clip).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].variant, ModelVariantId::M0);
        assert_abs_diff_eq!(back[1].points["img1"].raw, 31.25);
        assert_eq!(back[1].points, n.series[0].points);
    }
}
