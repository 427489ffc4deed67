//! Command-line entry point: `annotate`, `forge`, `eval`, `attribute`,
//! `report`, sharing a TOML config, `VQAKIT_*` environment overrides, and a
//! reproducibility manifest next to every artifact.
//!
//! Exit codes: 0 success, 2 configuration/usage, 3 data, 4 provider.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::annotation::{parse_annotations, write_annotations, AnnotationSource, ImageAnnotation, ParseStatus};
use crate::annotator::{raw_to_annotation, AnnotatorClient, ClientConfig, HttpTransport, PromptTemplate};
use crate::attribution::{
    contribution_map, export_contributions, run_masking_campaign, CampaignParams, ContributionMap,
    ExecProvider, HttpProvider, PredictionsProvider, TrialLedger,
};
use crate::config::RunConfig;
use crate::dataset::{read_dataset, write_dataset, QaPair};
use crate::error::{Error, Result};
use crate::forge::{forge_dataset, merge_labels, verify_counts, ForgeParams, SkewMode, TemplateSet};
use crate::manifest::Manifest;
use crate::metrics::{evaluate_run, EvalReport, Metric, PredictionRun};
use crate::stats::render::{render_category_grid, MachineTable};
use crate::stats::{aggregate_subjects, paired_bootstrap, PairedSamples};
use crate::util::derive_rng;

const VERSION_LINE: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

#[derive(Parser)]
#[command(
    name = "vqakit",
    version = VERSION_LINE,
    about = "Dataset forging, evaluation, and cluster attribution for brain-decoded VQA",
    arg_required_else_help = true
)]
pub struct Cli {
    /// TOML configuration file; flags override it, VQAKIT_* env vars
    /// override both.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker budget (0 = automatic). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch structured annotations from a VLM endpoint (cache-first).
    Annotate(AnnotateArgs),
    /// Build a QA dataset from verified annotations.
    Forge(ForgeArgs),
    /// Score a prediction run against a dataset.
    Eval(EvalArgs),
    /// Fit per-cluster contributions from a trial ledger or run a
    /// masking campaign against a provider.
    Attribute(AttributeArgs),
    /// Aggregate per-subject reports; optional paired bootstrap.
    Report(ReportArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    /// File with one image reference per line.
    #[arg(long, value_name = "FILE")]
    images: PathBuf,
    /// File holding the annotation prompt verbatim.
    #[arg(long, value_name = "FILE")]
    prompt: PathBuf,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Serve only from cache; a miss is an error.
    #[arg(long)]
    offline: bool,
    /// Output annotation JSONL.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ForgeArgs {
    #[arg(long, value_name = "FILE")]
    annotations_a: PathBuf,
    /// Second annotator pass; when present, only count-agreeing objects
    /// survive.
    #[arg(long, value_name = "FILE")]
    annotations_b: Option<PathBuf>,
    /// JSON map label -> embedding vector, enables label merging.
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Question template file; defaults to the bundled set.
    #[arg(long, value_name = "FILE")]
    templates: Option<PathBuf>,
    #[arg(long)]
    merge_threshold: Option<f64>,
    #[arg(long)]
    min_support: Option<usize>,
    #[arg(long)]
    max_share: Option<f64>,
    #[arg(long)]
    neg_ratio: Option<f64>,
    /// Drop skewed categories outright instead of down-sampling.
    #[arg(long)]
    drop_skewed: bool,
    /// Output dataset JSONL.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// JSONL records {question_id, prediction}.
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,
    /// Comma-separated: accuracy,bleu,rouge-l,meteor,cider.
    #[arg(long, default_value = "accuracy")]
    metrics: String,
    /// Include the per-category block in the stdout summary.
    #[arg(long)]
    per_category: bool,
    #[arg(long, default_value = "run")]
    run_id: String,
    #[arg(long, default_value = "?")]
    subject: String,
    /// Output report JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct AttributeArgs {
    /// Existing trial ledger (offline fit).
    #[arg(long, value_name = "FILE", conflicts_with = "provider")]
    ledger: Option<PathBuf>,
    /// Campaign mode: provider executable path or http(s) endpoint.
    #[arg(long, value_name = "CMD|URL")]
    provider: Option<String>,
    /// Dataset supplying stimuli and gold answers (campaign mode).
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    stimuli: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value = "?")]
    subject: String,
    /// Where to write the campaign ledger (campaign mode).
    #[arg(long, value_name = "FILE")]
    ledger_out: Option<PathBuf>,
    /// JSON map cluster_id -> voxel id list; enables voxelwise export.
    #[arg(long, value_name = "FILE")]
    cluster_table: Option<PathBuf>,
    /// Output contribution JSON; a .tsv sibling holds the per-category
    /// {cluster_id, coefficient} table.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Per-subject report JSON files from `eval`.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    runs: Vec<PathBuf>,
    /// Baseline report for significance testing.
    #[arg(long, value_name = "FILE")]
    baseline: Option<PathBuf>,
    /// Run the paired bootstrap of each run against the baseline.
    #[arg(long, requires = "baseline")]
    bootstrap: bool,
    /// Output machine TSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    apply_command_flags(&cli.command, &mut cfg);
    cfg.apply_env(&RunConfig::env_snapshot())?;
    if cfg.jobs > 0 {
        // Determinism never depends on the pool size, only throughput does.
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let config_text =
        toml::to_string(&cfg).map_err(|e| Error::Config(format!("config snapshot: {e}")))?;
    match cli.command {
        Command::Annotate(args) => cmd_annotate(args, &cfg, &config_text),
        Command::Forge(args) => cmd_forge(args, &cfg, &config_text),
        Command::Eval(args) => cmd_eval(args, &cfg, &config_text),
        Command::Attribute(args) => cmd_attribute(args, &cfg, &config_text),
        Command::Report(args) => cmd_report(args, &cfg, &config_text),
    }
}

fn apply_command_flags(cmd: &Command, cfg: &mut RunConfig) {
    match cmd {
        Command::Annotate(a) => {
            if let Some(v) = &a.endpoint {
                cfg.annotator.endpoint = v.clone();
            }
            if let Some(v) = &a.model {
                cfg.annotator.model = v.clone();
            }
            if let Some(v) = &a.cache_dir {
                cfg.annotator.cache_dir = v.display().to_string();
            }
        }
        Command::Forge(a) => {
            if let Some(v) = a.merge_threshold {
                cfg.merge_threshold = v;
            }
            if let Some(v) = a.min_support {
                cfg.min_support = v;
            }
            if let Some(v) = a.max_share {
                cfg.max_share = v;
            }
            if let Some(v) = a.neg_ratio {
                cfg.neg_ratio = v;
            }
        }
        Command::Attribute(a) => {
            if let Some(v) = a.lambda {
                cfg.lambda = v;
            }
            if let Some(v) = a.density {
                cfg.density = v;
            }
            if let Some(v) = a.trials {
                cfg.trials = v;
            }
            if let Some(v) = a.stimuli {
                cfg.stimuli = v;
            }
            if let Some(v) = a.clusters {
                cfg.clusters = v;
            }
        }
        Command::Eval(_) | Command::Report(_) => {}
    }
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>> {
    Ok(BufReader::new(
        std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_manifest(config_text: &str, inputs: &[&Path], artifact: &Path) -> Result<()> {
    Manifest::new(config_text, inputs)?.write_for(artifact)
}

fn cmd_annotate(args: AnnotateArgs, cfg: &RunConfig, config_text: &str) -> Result<()> {
    let images_text =
        std::fs::read_to_string(&args.images).map_err(|e| Error::io(&args.images, e))?;
    let prompt_text =
        std::fs::read_to_string(&args.prompt).map_err(|e| Error::io(&args.prompt, e))?;
    let prompt = PromptTemplate {
        name: args.prompt.display().to_string(),
        text: prompt_text,
    };
    let client = if args.offline {
        AnnotatorClient::offline(&cfg.annotator.cache_dir)
    } else {
        if cfg.annotator.endpoint.is_empty() {
            return Err(Error::Config(
                "annotate needs --endpoint (or annotator.endpoint in the config)".into(),
            ));
        }
        AnnotatorClient::new(
            ClientConfig {
                endpoint: cfg.annotator.endpoint.clone(),
                model: cfg.annotator.model.clone(),
                timeout_secs: cfg.annotator.timeout_secs,
                max_retries: cfg.annotator.max_retries,
                max_concurrency: cfg.jobs.max(1),
            },
            Box::new(HttpTransport::new(cfg.annotator.timeout_secs)?),
            &cfg.annotator.cache_dir,
        )
    };
    let mut annotations = Vec::new();
    let mut malformed = 0usize;
    for image_ref in images_text.lines().filter(|l| !l.trim().is_empty()) {
        let fetch = client.request_annotation(image_ref.trim(), &prompt)?;
        if fetch.raw.parse_status == ParseStatus::Malformed {
            malformed += 1;
            eprintln!("warning: malformed annotation for {image_ref}, skipped");
            continue;
        }
        annotations.push(raw_to_annotation(&fetch.raw, AnnotationSource::AnnotatorA)?);
    }
    write_annotations(create(&args.out)?, &annotations)?;
    write_manifest(config_text, &[&args.images, &args.prompt], &args.out)?;
    println!(
        "annotated {} images ({malformed} malformed skipped) -> {}",
        annotations.len(),
        args.out.display()
    );
    Ok(())
}

fn read_annotation_file(path: &Path) -> Result<Vec<ImageAnnotation>> {
    let outcome = parse_annotations(open(path)?)?;
    for reject in &outcome.rejects {
        eprintln!(
            "warning: {}:{}: {}",
            path.display(),
            reject.line,
            reject.message
        );
    }
    Ok(outcome.annotations)
}

fn cmd_forge(args: ForgeArgs, cfg: &RunConfig, config_text: &str) -> Result<()> {
    let mut annotations = read_annotation_file(&args.annotations_a)?;
    if let Some(path_b) = &args.annotations_b {
        let by_id: BTreeMap<String, ImageAnnotation> = read_annotation_file(path_b)?
            .into_iter()
            .map(|a| (a.image_id.clone(), a))
            .collect();
        let mut verified = Vec::with_capacity(annotations.len());
        let mut discarded = 0usize;
        for a in annotations {
            let Some(b) = by_id.get(&a.image_id) else {
                eprintln!("warning: {} missing from second pass, dropped", a.image_id);
                continue;
            };
            let (merged, discards) = verify_counts(&a, b)?;
            discarded += discards.len();
            verified.push(merged);
        }
        eprintln!("count verification discarded {discarded} objects");
        annotations = verified;
    }
    if let Some(path) = &args.embeddings {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let embeddings: BTreeMap<String, Vec<f64>> =
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
        for a in &annotations {
            for o in &a.objects {
                *vocab.entry(o.label.clone()).or_insert(0) += o.count.max(0) as usize;
            }
        }
        let map = merge_labels(&vocab, &embeddings, cfg.merge_threshold)?;
        map.apply_to_annotations(&mut annotations);
    }
    let templates = match &args.templates {
        Some(path) => TemplateSet::load(path)?,
        None => TemplateSet::bundled(),
    };
    let params = ForgeParams {
        merge_threshold: cfg.merge_threshold,
        min_support: cfg.min_support,
        max_share: cfg.max_share,
        neg_ratio: cfg.neg_ratio,
        seed: cfg.seed,
        skew_mode: if args.drop_skewed {
            SkewMode::DropCategory
        } else {
            SkewMode::Downsample
        },
    };
    let pairs = forge_dataset(&annotations, &templates, &params)?;
    write_dataset(create(&args.out)?, &pairs)?;
    let mut inputs: Vec<&Path> = vec![&args.annotations_a];
    inputs.extend(args.annotations_b.as_deref());
    inputs.extend(args.embeddings.as_deref());
    inputs.extend(args.templates.as_deref());
    write_manifest(config_text, &inputs, &args.out)?;
    let stats = crate::forge::dataset_stats(&pairs);
    println!(
        "forged {} pairs over {} images, {} categories -> {}",
        pairs.len(),
        annotations.len(),
        stats.counts.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, _cfg: &RunConfig, config_text: &str) -> Result<()> {
    let dataset: Vec<QaPair> = read_dataset(open(&args.dataset)?)?;
    let run = PredictionRun::read_records(&args.run_id, &args.subject, open(&args.predictions)?)?;
    let metrics = Metric::parse_list(&args.metrics)?;
    let report = evaluate_run(&run, &dataset, &metrics)?;
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(&args.out, text).map_err(|e| Error::io(&args.out, e))?;
    write_manifest(config_text, &[&args.dataset, &args.predictions], &args.out)?;
    for (metric, value) in &report.overall {
        println!("{metric}\t{value:.4}");
    }
    if args.per_category {
        let cells: Vec<(String, String)> = report
            .per_category
            .iter()
            .map(|(cat, scores)| {
                let acc = scores.get("accuracy").copied().unwrap_or(f64::NAN);
                (cat.to_string(), format!("{:.2}", 100.0 * acc))
            })
            .collect();
        print!("{}", render_category_grid(&cells, 3));
    }
    if !report.missing.is_empty() {
        eprintln!(
            "warning: {} questions had no prediction (scored 0)",
            report.missing.len()
        );
    }
    Ok(())
}

fn cmd_attribute(args: AttributeArgs, cfg: &RunConfig, config_text: &str) -> Result<()> {
    let mut inputs: Vec<PathBuf> = Vec::new();
    let ledger: TrialLedger = match (&args.ledger, &args.provider) {
        (Some(path), None) => {
            inputs.push(path.clone());
            TrialLedger::read(open(path)?)?
        }
        (None, Some(provider)) => {
            let dataset_path = args.dataset.as_ref().ok_or_else(|| {
                Error::Config("campaign mode needs --dataset for stimuli".into())
            })?;
            inputs.push(dataset_path.clone());
            let dataset = read_dataset(open(dataset_path)?)?;
            let boxed: Box<dyn PredictionsProvider> =
                if provider.starts_with("http://") || provider.starts_with("https://") {
                    Box::new(HttpProvider::new(
                        provider.clone(),
                        cfg.annotator.timeout_secs,
                    )?)
                } else {
                    Box::new(ExecProvider {
                        command: provider.clone(),
                    })
                };
            let params = CampaignParams {
                clusters: cfg.clusters,
                n_trials: cfg.trials,
                n_stimuli: cfg.stimuli,
                density: cfg.density,
                seed: cfg.seed,
                subject: args.subject.clone(),
                fixed_stimuli: false,
            };
            let outcome = run_masking_campaign(&dataset, &*boxed, &params)?;
            for failure in &outcome.failures {
                eprintln!(
                    "warning: trial {} failed: {}",
                    failure.trial_id, failure.message
                );
            }
            let ledger_out = args
                .ledger_out
                .clone()
                .unwrap_or_else(|| sibling(&args.out, ".ledger.jsonl"));
            outcome.ledger.write(create(&ledger_out)?)?;
            write_manifest(config_text, &[dataset_path.as_path()], &ledger_out)?;
            println!("ledger: {} trials -> {}", outcome.ledger.trials.len(), ledger_out.display());
            outcome.ledger
        }
        _ => {
            return Err(Error::Config(
                "attribute needs exactly one of --ledger or --provider".into(),
            ))
        }
    };
    let map = contribution_map(&ledger, cfg.lambda)?;
    let text = serde_json::to_string_pretty(&map).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(&args.out, text).map_err(|e| Error::io(&args.out, e))?;
    write_cluster_table(&map, &sibling(&args.out, ".tsv"))?;
    if let Some(table_path) = &args.cluster_table {
        inputs.push(table_path.clone());
        let text = std::fs::read_to_string(table_path).map_err(|e| Error::io(table_path, e))?;
        let table: BTreeMap<usize, Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", table_path.display())))?;
        let voxels = export_contributions(&map, &table)?;
        let voxel_path = sibling(&args.out, ".voxels.tsv");
        let mut out = String::from("category\tvoxel_id\tvalue\n");
        for (cat, rows) in &voxels {
            for (voxel, value) in rows {
                out.push_str(&format!("{}\t{voxel}\t{value}\n", cat.id()));
            }
        }
        std::fs::write(&voxel_path, out).map_err(|e| Error::io(&voxel_path, e))?;
    }
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_manifest(config_text, &input_refs, &args.out)?;
    println!(
        "contributions for {} categories at lambda {} -> {}",
        map.categories.len(),
        map.lambda,
        args.out.display()
    );
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_cluster_table(map: &ContributionMap, path: &Path) -> Result<()> {
    let mut out = String::from("category\tcluster_id\tcoefficient\n");
    for (cat, contribution) in &map.categories {
        for (cluster, coeff) in contribution.coefficients.iter().enumerate() {
            out.push_str(&format!("{}\t{cluster}\t{coeff}\n", cat.id()));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_report(path: &Path) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn cmd_report(args: ReportArgs, cfg: &RunConfig, config_text: &str) -> Result<()> {
    let reports = args
        .runs
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<EvalReport>>>()?;
    let metric_names: Vec<String> = reports
        .first()
        .map(|r| r.overall.keys().cloned().collect())
        .unwrap_or_default();

    let mut columns: Vec<String> = reports.iter().map(|r| r.subject_id.clone()).collect();
    columns.push("mean".into());
    columns.push("std".into());
    let mut rows = Vec::new();
    for metric in &metric_names {
        let per_subject: BTreeMap<String, f64> = reports
            .iter()
            .filter_map(|r| {
                r.overall
                    .get(metric)
                    .map(|v| (r.subject_id.clone(), *v))
            })
            .collect();
        let agg = aggregate_subjects(&per_subject)?;
        let mut values: Vec<f64> = reports
            .iter()
            .map(|r| r.overall.get(metric).copied().unwrap_or(f64::NAN))
            .collect();
        values.push(agg.mean);
        values.push(agg.std.unwrap_or(0.0));
        rows.push((metric.clone(), values));
    }
    let table = MachineTable { columns, rows };
    print!("{}", table.render());

    if args.bootstrap {
        let baseline = read_report(args.baseline.as_ref().unwrap())?;
        let base_scores = record_scores(&baseline);
        for report in &reports {
            let samples = PairedSamples::from_aligned(&record_scores(report), &base_scores)?;
            let mut rng = derive_rng(cfg.seed, &format!("report/boot/{}", report.subject_id));
            let p = paired_bootstrap(&samples, cfg.n_boot, &mut rng);
            let mark = if p < 0.05 { " *" } else { "" };
            println!("p[{} vs baseline] = {p:.4}{mark}", report.subject_id);
        }
    }

    std::fs::write(&args.out, table.to_tsv()).map_err(|e| Error::io(&args.out, e))?;
    let mut inputs: Vec<&Path> = args.runs.iter().map(PathBuf::as_path).collect();
    inputs.extend(args.baseline.as_deref());
    write_manifest(config_text, &inputs, &args.out)?;
    Ok(())
}

fn record_scores(report: &EvalReport) -> BTreeMap<String, f64> {
    report
        .records
        .iter()
        .map(|r| (r.question_id.clone(), r.accuracy))
        .collect()
}
