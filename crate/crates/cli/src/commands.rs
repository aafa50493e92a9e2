use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use geneval::featurestore::fetch::FetchOptions;
use geneval::featurestore::{fetch_images, read_embeddings, split_dataset, DatasetManifest};
use geneval::metrics::giqa::{giqa_gmm_score, giqa_knn_score, GiqaGmm, KnnIndex};
use geneval::metrics::normalize::{series_from_csv, series_to_csv};
use geneval::metrics::{clip_series, mean_score, normalize_scores};
use geneval::ranking::{average_normalized, build_report, emit_report};
use geneval::surveystats::{build_survey_report, parse_survey_csv, survey_markdown};
use geneval::{EmbeddingMatrix, Error, Metric, ModelVariantId, ReportFormat, ScoreSeries};

use crate::config::RunConfig;
use crate::{Cli, Command, FetchArgs, ScoreArgs, SplitArgs, SurveyArgs};

const MEANS_FILE: &str = "means.json";
const FIGURE5_FILE: &str = "figure5.csv";

/// Maps an error chain onto the exit-code contract.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_internal() { 1 } else { 2 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

struct Session {
    config: RunConfig,
    output_dir: PathBuf,
    formats: Vec<ReportFormat>,
}

fn context(cli: &Cli) -> Result<Session> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
        config.giqa.seed = seed;
    } else if let Some(seed) = config.seed {
        config.giqa.seed = seed;
    }
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut formats = if cli.format.is_empty() {
        config.formats.clone()
    } else {
        cli.format.clone()
    };
    if formats.is_empty() {
        formats.push(ReportFormat::Markdown);
    }
    formats.sort();
    formats.dedup();
    Ok(Session {
        config,
        output_dir,
        formats,
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = context(cli)?;
    match &cli.command {
        Command::Fetch(args) => fetch(&ctx, args),
        Command::Split(args) => split(&ctx, args),
        Command::Score(args) => score(&ctx, args),
        Command::Report => report(&ctx),
        Command::Survey(args) => survey(&ctx, args),
    }
}

fn manifest_path(ctx: &Session, explicit: Option<&PathBuf>) -> Result<PathBuf> {
    explicit
        .cloned()
        .or_else(|| ctx.config.manifest_path.clone())
        .ok_or_else(|| Error::InvalidConfig("no manifest: pass --manifest or set manifest_path".into()).into())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Replaces `path` with `contents`, first copying the old file to a
/// timestamped backup. Unchanged contents leave the file untouched.
fn write_with_backup(path: &Path, contents: &str) -> Result<Option<PathBuf>> {
    let mut backup = None;
    if path.exists() {
        if fs::read_to_string(path).ok().as_deref() == Some(contents) {
            return Ok(None);
        }
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or(Duration::ZERO)
            .as_millis();
        let name = format!("{}.bak-{stamp}", path.file_name().unwrap_or_default().to_string_lossy());
        let dest = path.with_file_name(name);
        fs::copy(path, &dest).with_context(|| format!("backing up {}", path.display()))?;
        backup = Some(dest);
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(backup)
}

fn fetch(ctx: &Session, args: &FetchArgs) -> Result<()> {
    if args.count == 0 {
        log::info!("count is 0; nothing to fetch");
        return Ok(());
    }
    let api_key = args
        .api_key
        .as_deref()
        .filter(|k| !k.trim().is_empty())
        .ok_or(Error::MissingApiKey)?;
    let path = manifest_path(ctx, args.manifest.as_ref())?;
    let mut manifest = if path.exists() {
        DatasetManifest::load(&path)?
    } else {
        DatasetManifest::default()
    };
    let dest = args.dest.clone().unwrap_or_else(|| ctx.output_dir.join("images"));
    let options = FetchOptions {
        base_url: args.base_url.clone(),
        max_requests_per_second: (args.max_rps > 0.0).then_some(args.max_rps),
        ..FetchOptions::default()
    };
    let outcome = fetch_images(&args.query, args.count, api_key, &dest, &options)?;
    for f in &outcome.failures {
        eprintln!("warning: {}: {}", f.id, f.reason);
    }
    if outcome.records.is_empty() {
        return Err(Error::Http(format!(
            "no images fetched for `{}` ({} failures)",
            args.query,
            outcome.failures.len()
        ))
        .into());
    }
    let known: std::collections::HashSet<String> = manifest.records.iter().map(|r| r.id.clone()).collect();
    let mut added = 0;
    for mut record in outcome.records {
        if known.contains(&record.id) {
            continue;
        }
        if record.prompt.is_empty() {
            record.prompt = args.query.clone();
        }
        manifest.records.push(record);
        added += 1;
    }
    manifest.validate()?;
    if let Some(b) = write_with_backup(&path, &manifest.to_json()?)? {
        log::info!("previous manifest saved to {}", b.display());
    }
    println!(
        "{added} records added to {} ({} requests)",
        path.display(),
        outcome.requests
    );
    Ok(())
}

fn split(ctx: &Session, args: &SplitArgs) -> Result<()> {
    let path = manifest_path(ctx, args.manifest.as_ref())?;
    let mut manifest = DatasetManifest::load(&path)?;
    if let Some(r) = &args.ratios {
        manifest.split_ratios = [r[0], r[1], r[2]];
    }
    if let Some(seed) = ctx.config.seed {
        manifest.seed = seed;
    }
    let out = split_dataset(&manifest)?;
    match write_with_backup(&path, &out.to_json()?)? {
        Some(b) => log::info!("previous manifest saved to {}", b.display()),
        None if path.exists() => log::info!("manifest already split with seed {}", out.seed),
        None => {}
    }
    let c = out.counts();
    println!("train {}  val {}  test {}  (seed {})", c.train, c.val, c.test, out.seed);
    Ok(())
}

fn load_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    read_embeddings(path).with_context(|| format!("reading {}", path.display()))
}

fn check_dims(what: &str, expected: &EmbeddingMatrix, path: &Path, got: &EmbeddingMatrix) -> Result<()> {
    if expected.dims() != got.dims() {
        return Err(anyhow!(Error::DimensionMismatch {
            expected: expected.dims(),
            got: got.dims()
        }))
        .with_context(|| {
            format!(
                "{} has {} dims, {what} has {}",
                path.display(),
                got.dims(),
                expected.dims()
            )
        });
    }
    Ok(())
}

fn score_metric(ctx: &Session, metric: Metric) -> Result<Vec<ScoreSeries>> {
    let inputs = ctx
        .config
        .embeddings
        .get(&metric)
        .ok_or_else(|| Error::InvalidConfig(format!("no embeddings configured for {metric}")))?;
    let generated: Vec<(ModelVariantId, PathBuf, EmbeddingMatrix)> = inputs
        .generated_paths
        .iter()
        .map(|(v, p)| Ok((*v, p.clone(), load_matrix(p)?)))
        .collect::<Result<_>>()?;

    let mut series = Vec::new();
    match metric {
        Metric::Clip => {
            let prompt_path = inputs.prompt_path.as_ref().expect("validated");
            let prompts = load_matrix(prompt_path)?;
            for (variant, path, images) in &generated {
                check_dims("the prompt matrix", &prompts, path, images)?;
                series.push(clip_series(
                    images,
                    &prompts,
                    *variant,
                    ctx.config.clip.pairing,
                    ctx.config.clip.weight,
                )?);
            }
        }
        Metric::GiqaGmm | Metric::GiqaKnn => {
            let reference_path = inputs.reference_path.as_ref().expect("validated");
            let reference = load_matrix(reference_path)?;
            for (_, path, images) in &generated {
                check_dims("the reference matrix", &reference, path, images)?;
            }
            let params = &ctx.config.giqa;
            if metric == Metric::GiqaGmm {
                let fitted = GiqaGmm::fit(&reference, params)?;
                if !fitted.converged {
                    log::warn!("EM stopped at max_iter={} before converging", params.max_iter);
                }
                let models = ctx.output_dir.join("models");
                ensure_dir(&models)?;
                fitted.save(&models.join("giqa_gmm.json"))?;
                for (variant, _, images) in &generated {
                    series.push(giqa_gmm_score(&fitted.gmm, &fitted.pca, images, *variant)?);
                }
            } else {
                let index = KnnIndex::new(reference, params.knn_k)?;
                for (variant, _, images) in &generated {
                    series.push(giqa_knn_score(&index, images, *variant, params.knn_statistic)?);
                }
            }
        }
    }
    Ok(series)
}

fn score(ctx: &Session, args: &ScoreArgs) -> Result<()> {
    let metrics: Vec<Metric> = match args.metric {
        Some(m) => vec![m],
        None => ctx.config.embeddings.keys().copied().collect(),
    };
    if metrics.is_empty() {
        bail!(Error::InvalidConfig(
            "no embeddings configured; nothing to score".into()
        ));
    }
    let means_path = ctx.output_dir.join(MEANS_FILE);
    let mut means: BTreeMap<Metric, BTreeMap<ModelVariantId, f64>> = match fs::read_to_string(&means_path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    };
    for metric in metrics {
        let series = score_metric(ctx, metric)?;
        let normalized = normalize_scores(&series, &ctx.config.normalization)?;
        for w in &normalized.warnings {
            eprintln!("warning: {w}");
        }
        let dir = ctx.output_dir.join("scores").join(metric.id());
        ensure_dir(&dir)?;
        let mut per_variant = BTreeMap::new();
        for (raw, norm) in series.iter().zip(&normalized.series) {
            let path = dir.join(format!("{}.csv", raw.variant));
            fs::write(&path, series_to_csv(std::slice::from_ref(norm))?)
                .with_context(|| format!("writing {}", path.display()))?;
            per_variant.insert(raw.variant, mean_score(raw)?);
            println!(
                "{metric} {}: {} images, mean {:.4}",
                raw.variant,
                raw.len(),
                per_variant[&raw.variant]
            );
        }
        means.insert(metric, per_variant);
    }
    ensure_dir(&ctx.output_dir)?;
    let mut text = serde_json::to_string_pretty(&means)?;
    text.push('\n');
    fs::write(&means_path, text).with_context(|| format!("writing {}", means_path.display()))?;
    Ok(())
}

fn report(ctx: &Session) -> Result<()> {
    // Means from the config win; otherwise use what `score` wrote.
    let mut means = ctx.config.raw_means.clone();
    let means_path = ctx.output_dir.join(MEANS_FILE);
    if means.is_empty() {
        let text = fs::read_to_string(&means_path).map_err(|e| {
            Error::InvalidConfig(format!(
                "no raw_means in config and {} unreadable ({e}); run `score` first",
                means_path.display()
            ))
        })?;
        means = serde_json::from_str(&text).map_err(Error::from)?;
    }
    if means.is_empty() {
        bail!(Error::InvalidConfig("no means to report".into()));
    }
    ensure_dir(&ctx.output_dir)?;
    for (metric, per_variant) in &means {
        let report = build_report(*metric, per_variant).with_context(|| format!("{metric} report"))?;
        for format in &ctx.formats {
            let text = emit_report(&report, *format)?;
            let path = ctx.output_dir.join(format!("report_{metric}.{}", format.extension()));
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            if *format == ReportFormat::Markdown {
                println!("{metric}\n{text}");
            }
        }
    }

    // Normalized averages need the per-image score files.
    let scores = ctx.output_dir.join("scores");
    let mut by_metric = BTreeMap::new();
    for metric in Metric::ALL {
        let dir = scores.join(metric.id());
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let mut series = Vec::new();
        for f in files {
            let text = fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
            series.extend(series_from_csv(&text, metric).with_context(|| format!("parsing {}", f.display()))?);
        }
        if !series.is_empty() {
            by_metric.insert(metric, series);
        }
    }
    if !by_metric.is_empty() {
        let (_, csv) = average_normalized(&by_metric)?;
        let path = ctx.output_dir.join(FIGURE5_FILE);
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        log::info!("normalized averages written to {}", path.display());
    }
    Ok(())
}

fn survey(ctx: &Session, args: &SurveyArgs) -> Result<()> {
    let input = args
        .input
        .clone()
        .or_else(|| ctx.config.survey_path.clone())
        .ok_or_else(|| Error::InvalidConfig("no survey CSV: pass a path or set survey_path".into()))?;
    let data = parse_survey_csv(&input)?;
    for d in &data.diagnostics {
        eprintln!("{}:{}: {}", input.display(), d.line, d.message);
    }
    let report = build_survey_report(&data)?;
    print!("{}", survey_markdown(&report));
    ensure_dir(&ctx.output_dir)?;
    let path = ctx.output_dir.join("survey.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
