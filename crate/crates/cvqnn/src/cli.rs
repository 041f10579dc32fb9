//! Command-line parsing and the six subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cvqnn_core::data::ImageSet;
use cvqnn_core::metrics::MetricSet;
use cvqnn_core::model::{HybridModel, ModelKind};
use cvqnn_core::noise::{inject_gaussian_noise, noise_sweep_grid};
use cvqnn_core::pca::PcaModel;
use cvqnn_core::saliency::input_gradient_map;
use cvqnn_core::stats::{compare_models, StatTestReport};
use cvqnn_core::train::{self, encode, evaluate, FoldResult, TrainConfig};
use serde::Serialize;
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::config::ConfigFile;
use crate::dataset::{archive_path, load_archive, parse_checksums, verify_checksum, Splits};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::pgm::write_pgm;
use crate::report::{
    curve_rows, read_csv, training_curve_rows, write_csv, write_file, write_json, EvalSummary, FoldRow, NoiseRow,
};

#[derive(Debug, Parser)]
#[command(name = "cvqnn", version, about = "Hybrid CV / DV / classical classifiers on MedMNIST-style archives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified k-fold training on the train split, then a test-set evaluation of the best fold.
    Train(TrainArgs),
    /// Evaluates a checkpoint on one split.
    Eval(EvalArgs),
    /// Test-set F1 under increasing Gaussian pixel noise.
    NoiseSweep(NoiseArgs),
    /// Input-gradient saliency maps rendered as PGM images.
    Saliency(SaliencyArgs),
    /// Friedman and pairwise Wilcoxon tests over per-fold scores.
    Stats(StatsArgs),
    /// Explained variance of a 4-component PCA per dataset.
    PcaReport(PcaArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Plain `key = value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// pneumonia, breast, organa, or any other archive name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Archive path; defaults to the dataset's file name inside --data-dir.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// [default: data]
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// File of `dataset sha256` lines to verify the archive against.
    #[arg(long)]
    pub checksums: Option<PathBuf>,
}

const DATA_KEYS: [&str; 5] = ["dataset", "archive", "data_dir", "checksums", "out"];

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// cv, dv or classical.
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Folds trained concurrently [default: 1]. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// train, val or test [default: test].
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// One checkpoint per model; repeat the flag or separate with commas.
    #[arg(long, value_delimiter = ',')]
    pub checkpoint: Vec<PathBuf>,
    /// Noise seed shared by every model [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Clip noisy pixels to [0, 1].
    #[arg(long)]
    pub clip: bool,
    /// [default: test]
    #[arg(long)]
    pub split: Option<String>,
    /// Models evaluated concurrently [default: 1].
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Sample indices within the split; repeat or separate with commas.
    #[arg(long = "index", value_delimiter = ',', required = true)]
    pub indices: Vec<usize>,
    /// Class whose logit is differentiated [default: the predicted class].
    #[arg(long)]
    pub target: Option<usize>,
    /// Also write the raw signed gradient as CSV.
    #[arg(long)]
    pub signed: bool,
    /// [default: test]
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
    /// `folds.csv` files written by `train`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Family-wise significance level [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated dataset names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dataset: Vec<String>,
    /// Only valid with a single dataset.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub checksums: Option<PathBuf>,
    /// Components [default: 4].
    #[arg(long)]
    pub k: Option<usize>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model '{s}' (expected cv, dv or classical)"))
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, argv: &[String]) -> CliResult<()> {
    match command {
        Command::Train(a) => cmd_train(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::NoiseSweep(a) => cmd_noise_sweep(a, argv),
        Command::Saliency(a) => cmd_saliency(a, argv),
        Command::Stats(a) => cmd_stats(a, argv),
        Command::PcaReport(a) => cmd_pca_report(a, argv),
    }
}

fn load_config(common: &Common, extra_keys: &[&str]) -> CliResult<ConfigFile> {
    let cfg = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let allowed: Vec<&str> = DATA_KEYS.iter().chain(extra_keys).copied().collect();
    cfg.check_keys(&allowed)?;
    Ok(cfg)
}

fn out_dir(cfg: &ConfigFile, common: &Common) -> CliResult<PathBuf> {
    cfg.resolve(common.out.clone(), "out", PathBuf::from("out"))
}

struct DataSource {
    dataset: String,
    path: PathBuf,
    checksums: Option<PathBuf>,
}

fn data_source(cfg: &ConfigFile, d: &DataArgs, fallback: Option<&str>) -> CliResult<DataSource> {
    let dataset = cfg
        .resolve_opt(d.dataset.clone(), "dataset")?
        .or_else(|| fallback.map(str::to_string))
        .ok_or_else(|| CliError::config("--dataset is required"))?;
    let archive = cfg.resolve_opt(d.archive.clone(), "archive")?;
    let data_dir = cfg.resolve(d.data_dir.clone(), "data_dir", PathBuf::from("data"))?;
    let checksums = cfg.resolve_opt(d.checksums.clone(), "checksums")?;
    Ok(DataSource { path: archive_path(&dataset, archive.as_deref(), &data_dir), dataset, checksums })
}

fn load_splits(src: &DataSource) -> CliResult<Splits> {
    log::info!("loading {} from {}", src.dataset, src.path.display());
    let splits = load_archive(&src.path, &src.dataset)?;
    if let Some(path) = &src.checksums {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        verify_checksum(&splits, &parse_checksums(&text)?)?;
    }
    log::info!(
        "{}: {} train / {} val / {} test images, {} classes, sha256 {}",
        splits.name,
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        splits.train.num_classes,
        splits.sha256
    );
    Ok(splits)
}

fn data_json(src: &DataSource) -> serde_json::Value {
    json!({ "dataset": src.dataset, "archive": src.path, "checksums": src.checksums })
}

/// Runs `f(0..n)` on up to `threads` scoped threads; results keep index order.
fn run_indexed<T: Send>(n: usize, threads: usize, f: impl Fn(usize) -> CliResult<T> + Sync) -> CliResult<Vec<T>> {
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let f = &f;
    let mut results: Vec<(usize, CliResult<T>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| s.spawn(move || (w..n).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    });
    results.sort_by_key(|r| r.0);
    results.into_iter().map(|r| r.1).collect()
}

fn check_compatible(model: &HybridModel, pca: &PcaModel, set: &ImageSet) -> CliResult<()> {
    if model.num_classes != set.num_classes {
        return Err(CliError::data(format!(
            "checkpoint has {} classes but {} has {}",
            model.num_classes, set.name, set.num_classes
        )));
    }
    if pca.input_dim != set.dim {
        return Err(CliError::data(format!("checkpoint expects {} pixels, images have {}", pca.input_dim, set.dim)));
    }
    Ok(())
}

fn load_checkpoint(path: Option<&Path>) -> CliResult<Checkpoint> {
    Checkpoint::load(path.ok_or_else(|| CliError::config("--checkpoint is required"))?)
}

#[derive(Debug, Serialize)]
struct FoldSummary {
    fold: usize,
    train_size: usize,
    val_size: usize,
    steps: u64,
    train_loss: Option<f64>,
    val_loss: Option<f64>,
    train: MetricSet,
    val: MetricSet,
}

#[derive(Debug, Serialize)]
struct TrainMetrics {
    dataset: String,
    model: ModelKind,
    archive_sha256: String,
    config: TrainConfig,
    folds: Vec<FoldSummary>,
    val_mean: MetricSet,
    val_std: MetricSet,
    train_mean: MetricSet,
    train_std: MetricSet,
    best_fold: usize,
    /// Best fold evaluated on the test split.
    test: EvalSummary,
}

fn cmd_train(a: TrainArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["model", "seed", "epochs", "batch_size", "lr", "folds", "threads"])?;
    let out = out_dir(&cfg, &a.common)?;
    let kind = match a.model {
        Some(k) => k,
        None => {
            let s: String = cfg.get("model")?.ok_or_else(|| CliError::config("--model is required"))?;
            parse_kind(&s).map_err(CliError::config)?
        }
    };
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        seed: cfg.resolve(a.seed, "seed", defaults.seed)?,
        epochs: cfg.resolve(a.epochs, "epochs", defaults.epochs)?,
        batch_size: cfg.resolve(a.batch_size, "batch_size", defaults.batch_size)?,
        learning_rate: cfg.resolve(a.lr, "lr", defaults.learning_rate)?,
        folds: cfg.resolve(a.folds, "folds", defaults.folds)?,
        ..defaults
    };
    config.validate()?;
    let threads = cfg.resolve(a.threads, "threads", 1usize)?;
    let src = data_source(&cfg, &a.data, None)?;
    let mut manifest = RunManifest::start(
        argv.to_vec(),
        json!({ "data": data_json(&src), "model": kind, "train": config, "threads": threads, "out": out }),
        Some(config.seed),
    );
    let splits = load_splits(&src)?;
    manifest.checksums.insert(splits.name.clone(), splits.sha256.clone());

    let fold_splits = train::fold_splits(&splits.train, &config)?;
    let results: Vec<FoldResult> = run_indexed(fold_splits.len(), threads, |i| {
        log::info!("{} fold {}/{}: training", kind, i + 1, fold_splits.len());
        let r = train::run_fold(kind, &splits.train, &fold_splits[i], &config, i)?;
        log::info!("{} fold {}/{}: val F1 {:.4}", kind, i + 1, fold_splits.len(), r.val_metrics.f1);
        Ok(r)
    })?;

    let mut folds = Vec::with_capacity(results.len());
    let mut fold_rows = Vec::with_capacity(results.len());
    for (r, split) in results.iter().zip(&fold_splits) {
        let dir = format!("fold-{}", r.fold_index);
        let ck = Checkpoint::new(&r.model, &r.pca, &splits.name, r.fold_index, config.seed);
        write_file(&out.join(&dir).join("model.ckpt.json"), ck.to_json().as_bytes())?;
        write_csv(&out.join(&dir).join("curves.csv"), &training_curve_rows(&r.curves))?;
        manifest.artifacts.push(format!("{dir}/model.ckpt.json"));
        manifest.artifacts.push(format!("{dir}/curves.csv"));
        let last = r.curves.last();
        folds.push(FoldSummary {
            fold: r.fold_index,
            train_size: split.0.len(),
            val_size: split.1.len(),
            steps: r.steps,
            train_loss: last.map(|c| c.train_loss),
            val_loss: last.map(|c| c.val_loss),
            train: r.train_metrics,
            val: r.val_metrics,
        });
        let MetricSet { acc, p, r: rec, f1 } = r.val_metrics;
        fold_rows.push(FoldRow {
            dataset: splits.name.clone(),
            model: kind.to_string(),
            fold: r.fold_index,
            acc,
            p,
            r: rec,
            f1,
        });
    }
    write_csv(&out.join("folds.csv"), &fold_rows)?;
    manifest.artifacts.push("folds.csv".into());

    let cv = train::summarize(results)?;
    let best = &cv.folds[cv.best_fold];
    let ck = Checkpoint::new(&best.model, &best.pca, &splits.name, best.fold_index, config.seed);
    write_file(&out.join("best.ckpt.json"), ck.to_json().as_bytes())?;
    manifest.artifacts.push("best.ckpt.json".into());
    let test = evaluate(&best.model, &best.pca, &splits.test)?;
    let test = EvalSummary::new(&splits.name, "test", kind.as_str(), &test);
    log::info!(
        "{} best fold {}: test acc {:.4}, AUROC {:?}, AUPRC {:?}",
        kind,
        cv.best_fold,
        test.row.acc,
        test.row.auroc,
        test.row.auprc
    );
    let metrics = TrainMetrics {
        dataset: splits.name.clone(),
        model: kind,
        archive_sha256: splits.sha256.clone(),
        config,
        folds,
        val_mean: cv.val_mean,
        val_std: cv.val_std,
        train_mean: cv.train_mean,
        train_std: cv.train_std,
        best_fold: cv.best_fold,
        test,
    };
    write_json(&out.join("metrics.json"), &metrics)?;
    manifest.artifacts.push("metrics.json".into());
    manifest.metrics = json!({
        "val_mean": metrics.val_mean,
        "val_std": metrics.val_std,
        "best_fold": metrics.best_fold,
        "test": metrics.test.row,
    });
    manifest.finish(&out)
}

fn cmd_eval(a: EvalArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["checkpoint", "split"])?;
    let out = out_dir(&cfg, &a.common)?;
    let ck_path = cfg.resolve_opt(a.checkpoint.clone(), "checkpoint")?;
    let ck = load_checkpoint(ck_path.as_deref())?;
    let split = cfg.resolve(a.split.clone(), "split", "test".to_string())?;
    let src = data_source(&cfg, &a.data, Some(&ck.dataset))?;
    let mut manifest = RunManifest::start(
        argv.to_vec(),
        json!({ "data": data_json(&src), "checkpoint": ck_path, "split": split, "out": out }),
        Some(ck.seed),
    );
    let (model, pca) = (ck.model()?, ck.pca_model()?);
    let splits = load_splits(&src)?;
    manifest.checksums.insert(splits.name.clone(), splits.sha256.clone());
    let set = splits.split(&split)?;
    check_compatible(&model, &pca, set)?;
    let eval = evaluate(&model, &pca, set)?;
    let summary = EvalSummary::new(&splits.name, &split, model.kind.as_str(), &eval);
    let c = model.num_classes;
    write_json(&out.join("eval.json"), &summary)?;
    write_csv(&out.join("roc.csv"), &curve_rows(&eval.report.roc_curves, c))?;
    write_csv(&out.join("pr.csv"), &curve_rows(&eval.report.pr_curves, c))?;
    manifest.artifacts.extend(["eval.json", "roc.csv", "pr.csv"].map(String::from));
    log::info!("{} on {} {}: acc {:.4}, F1 {:.4}", model.kind, splits.name, split, summary.row.acc, summary.row.f1);
    manifest.metrics = serde_json::to_value(summary.row).expect("row serializes");
    manifest.finish(&out)
}

fn cmd_noise_sweep(a: NoiseArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["seed", "split", "clip", "threads"])?;
    let out = out_dir(&cfg, &a.common)?;
    if a.checkpoint.is_empty() {
        return Err(CliError::config("at least one --checkpoint is required"));
    }
    let checkpoints = a.checkpoint.iter().map(|p| Checkpoint::load(p)).collect::<CliResult<Vec<_>>>()?;
    let models = checkpoints
        .iter()
        .map(|ck| Ok((ck.model()?, ck.pca_model()?)))
        .collect::<CliResult<Vec<(HybridModel, PcaModel)>>>()?;
    let seed = cfg.resolve(a.seed, "seed", 0u64)?;
    let clip = a.clip || cfg.get("clip")?.unwrap_or(false);
    let split = cfg.resolve(a.split.clone(), "split", "test".to_string())?;
    let threads = cfg.resolve(a.threads, "threads", 1usize)?;
    let src = data_source(&cfg, &a.data, Some(&checkpoints[0].dataset))?;
    let mut manifest = RunManifest::start(
        argv.to_vec(),
        json!({
            "data": data_json(&src),
            "checkpoints": a.checkpoint,
            "split": split,
            "clip": clip,
            "grid": noise_sweep_grid(),
            "threads": threads,
            "out": out,
        }),
        Some(seed),
    );
    let splits = load_splits(&src)?;
    manifest.checksums.insert(splits.name.clone(), splits.sha256.clone());
    let set = splits.split(&split)?;
    for (model, pca) in &models {
        check_compatible(model, pca, set)?;
    }
    let mut rows = Vec::new();
    let mut by_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for sigma in noise_sweep_grid() {
        let noisy = inject_gaussian_noise(set, sigma, seed, clip)?;
        let f1s = run_indexed(models.len(), threads, |i| Ok(evaluate(&models[i].0, &models[i].1, &noisy)?.report.metrics.f1))?;
        for ((model, _), f1) in models.iter().zip(f1s) {
            log::info!("sigma {sigma:.2} {}: F1 {f1:.4}", model.kind);
            rows.push(NoiseRow { sigma, model_kind: model.kind.to_string(), f1 });
            by_model.entry(model.kind.to_string()).or_default().push(f1);
        }
    }
    write_csv(&out.join("noise_sweep.csv"), &rows)?;
    manifest.artifacts.push("noise_sweep.csv".into());
    manifest.metrics = json!({ "f1": by_model });
    manifest.finish(&out)
}

#[derive(Debug, Serialize)]
struct SaliencySidecar {
    index: usize,
    predicted_class: usize,
    confidence: f64,
    true_class: usize,
    target_class: usize,
    model_kind: ModelKind,
}

#[derive(Debug, Serialize)]
struct SignedRow {
    row: usize,
    col: usize,
    gradient: f64,
}

fn to_gray(values: &[f64]) -> Vec<u8> {
    values.iter().map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8).collect()
}

fn cmd_saliency(a: SaliencyArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["checkpoint", "split", "target", "signed"])?;
    let out = out_dir(&cfg, &a.common)?;
    let ck_path = cfg.resolve_opt(a.checkpoint.clone(), "checkpoint")?;
    let ck = load_checkpoint(ck_path.as_deref())?;
    let split = cfg.resolve(a.split.clone(), "split", "test".to_string())?;
    let target = cfg.resolve_opt(a.target, "target")?;
    let signed = a.signed || cfg.get("signed")?.unwrap_or(false);
    let src = data_source(&cfg, &a.data, Some(&ck.dataset))?;
    let mut manifest = RunManifest::start(
        argv.to_vec(),
        json!({
            "data": data_json(&src),
            "checkpoint": ck_path,
            "split": split,
            "indices": a.indices,
            "target": target,
            "signed": signed,
            "out": out,
        }),
        Some(ck.seed),
    );
    let (model, pca) = (ck.model()?, ck.pca_model()?);
    let splits = load_splits(&src)?;
    manifest.checksums.insert(splits.name.clone(), splits.sha256.clone());
    let set = splits.split(&split)?;
    check_compatible(&model, &pca, set)?;
    if let Some(bad) = a.indices.iter().find(|&&i| i >= set.len()) {
        return Err(CliError::data(format!("index {bad} is out of range for the {} {split} split ({} images)", set.name, set.len())));
    }
    if let Some(t) = target.filter(|&t| t >= model.num_classes) {
        return Err(CliError::config(format!("--target {t} is out of range for {} classes", model.num_classes)));
    }
    for &i in &a.indices {
        let image = set.image(i);
        let features = encode(&pca, image)?;
        let predicted = model.forward(&features)?.predicted_class();
        let map = input_gradient_map(&model, &pca, image, target.unwrap_or(predicted))?;
        let (w, h) = (map.width, map.height);
        let recon = pca.inverse_transform(&pca.transform(image)?)?;
        let stem = format!("sample-{i}");
        write_pgm(&out.join(format!("{stem}-reconstruction.pgm")), w, h, &to_gray(&recon))?;
        write_pgm(&out.join(format!("{stem}-saliency.pgm")), w, h, &map.to_gray())?;
        let sidecar = SaliencySidecar {
            index: i,
            predicted_class: map.predicted_class,
            confidence: map.confidence,
            true_class: set.labels[i],
            target_class: map.target_class,
            model_kind: model.kind,
        };
        write_json(&out.join(format!("{stem}.json")), &sidecar)?;
        manifest.artifacts.extend([
            format!("{stem}-reconstruction.pgm"),
            format!("{stem}-saliency.pgm"),
            format!("{stem}.json"),
        ]);
        if signed {
            let rows: Vec<SignedRow> =
                map.signed.iter().enumerate().map(|(j, &g)| SignedRow { row: j / w, col: j % w, gradient: g }).collect();
            write_csv(&out.join(format!("{stem}-signed.csv")), &rows)?;
            manifest.artifacts.push(format!("{stem}-signed.csv"));
        }
        log::info!("sample {i}: predicted {} ({:.3}), true {}", map.predicted_class, map.confidence, set.labels[i]);
    }
    manifest.finish(&out)
}

const STAT_METRICS: [&str; 4] = ["acc", "p", "r", "f1"];

#[derive(Debug, Serialize)]
struct StatsOutput {
    alpha: f64,
    alpha_corrected: f64,
    /// Dataset, then metric.
    datasets: BTreeMap<String, BTreeMap<String, StatTestReport>>,
}

/// Per-fold values of each metric for each model, folds in index order.
fn group_folds(rows: &[FoldRow]) -> CliResult<BTreeMap<String, BTreeMap<ModelKind, Vec<&FoldRow>>>> {
    let mut grouped: BTreeMap<String, BTreeMap<ModelKind, Vec<&FoldRow>>> = BTreeMap::new();
    for r in rows {
        let kind = parse_kind(&r.model).map_err(CliError::data)?;
        grouped.entry(r.dataset.clone()).or_default().entry(kind).or_default().push(r);
    }
    for (dataset, models) in grouped.iter_mut() {
        for kind in ModelKind::ALL {
            if !models.contains_key(&kind) {
                return Err(CliError::data(format!("{dataset}: no fold results for the {kind} model")));
            }
        }
        let mut folds: Option<Vec<usize>> = None;
        for (kind, rows) in models.iter_mut() {
            rows.sort_by_key(|r| r.fold);
            let idx: Vec<usize> = rows.iter().map(|r| r.fold).collect();
            if idx.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::data(format!("{dataset}: duplicate fold rows for {kind}")));
            }
            match &folds {
                None => folds = Some(idx),
                Some(f) if *f != idx => {
                    return Err(CliError::data(format!("{dataset}: models were evaluated on different folds")))
                }
                _ => {}
            }
        }
    }
    Ok(grouped)
}

fn metric_of(r: &FoldRow, metric: &str) -> f64 {
    match metric {
        "acc" => r.acc,
        "p" => r.p,
        "r" => r.r,
        _ => r.f1,
    }
}

fn cmd_stats(a: StatsArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["alpha"])?;
    let out = out_dir(&cfg, &a.common)?;
    let alpha = cfg.resolve(a.alpha, "alpha", 0.05)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut manifest = RunManifest::start(argv.to_vec(), json!({ "inputs": a.inputs, "alpha": alpha, "out": out }), None);
    let mut rows = Vec::new();
    for path in &a.inputs {
        rows.extend(read_csv::<FoldRow>(path)?);
    }
    let grouped = group_folds(&rows)?;
    let mut datasets = BTreeMap::new();
    let mut alpha_corrected = alpha / 3.0;
    for (dataset, models) in &grouped {
        let mut per_metric = BTreeMap::new();
        for metric in STAT_METRICS {
            let values = |k: ModelKind| models[&k].iter().map(|r| metric_of(r, metric)).collect::<Vec<_>>();
            let report = compare_models(&values(ModelKind::Classical), &values(ModelKind::Dv), &values(ModelKind::Cv), alpha)?;
            alpha_corrected = report.alpha_corrected;
            let verdict = |reject: bool| if reject { "rejected" } else { "retained" };
            println!(
                "{dataset} {metric}: Friedman chi2 = {:.4}, p = {:.4} -> H0 {} at alpha = {:.4}",
                report.friedman_chi2,
                report.friedman_p,
                verdict(report.friedman_reject),
                report.alpha_corrected
            );
            for t in &report.pairwise {
                println!("{dataset} {metric}: Wilcoxon {} W = {}, p = {:.4} -> H0 {}", t.pair, t.w, t.p, verdict(t.reject));
            }
            per_metric.insert(metric.to_string(), report);
        }
        datasets.insert(dataset.clone(), per_metric);
    }
    let summary: BTreeMap<String, bool> =
        datasets.iter().map(|(d, m)| (d.clone(), m.values().all(StatTestReport::all_retained))).collect();
    write_json(&out.join("stats.json"), &StatsOutput { alpha, alpha_corrected, datasets })?;
    manifest.artifacts.push("stats.json".into());
    manifest.metrics = json!({ "all_retained": summary });
    manifest.finish(&out)
}

#[derive(Debug, Serialize)]
struct PcaEntry {
    dataset: String,
    archive_sha256: String,
    train: usize,
    val: usize,
    test: usize,
    num_classes: usize,
    k: usize,
    explained_variance: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    cumulative_ratio: f64,
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct PcaRow {
    dataset: String,
    component: usize,
    explained_variance_ratio: f64,
    cumulative: f64,
}

fn cmd_pca_report(a: PcaArgs, argv: &[String]) -> CliResult<()> {
    let cfg = load_config(&a.common, &["k"])?;
    let out = out_dir(&cfg, &a.common)?;
    let k = cfg.resolve(a.k, "k", cvqnn_core::model::NUM_WIRES)?;
    if a.archive.is_some() && a.dataset.len() != 1 {
        return Err(CliError::config("--archive needs exactly one --dataset"));
    }
    let sources = a
        .dataset
        .iter()
        .map(|d| {
            let args = DataArgs {
                dataset: Some(d.clone()),
                archive: a.archive.clone(),
                data_dir: a.data_dir.clone(),
                checksums: a.checksums.clone(),
            };
            data_source(&cfg, &args, None)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut manifest = RunManifest::start(
        argv.to_vec(),
        json!({ "data": sources.iter().map(data_json).collect::<Vec<_>>(), "k": k, "out": out }),
        None,
    );
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for src in &sources {
        let splits = load_splits(src)?;
        manifest.checksums.insert(splits.name.clone(), splits.sha256.clone());
        let pca = PcaModel::fit_pixels(&splits.train.images, splits.train.dim, k)?;
        let mut cumulative = 0.0;
        for (i, &r) in pca.explained_variance_ratio.iter().enumerate() {
            cumulative += r;
            rows.push(PcaRow { dataset: splits.name.clone(), component: i + 1, explained_variance_ratio: r, cumulative });
        }
        log::info!("{}: cumulative explained variance with k = {k}: {:.4}", splits.name, pca.cumulative_ratio());
        entries.push(PcaEntry {
            dataset: splits.name.clone(),
            archive_sha256: splits.sha256.clone(),
            train: splits.train.len(),
            val: splits.val.len(),
            test: splits.test.len(),
            num_classes: splits.train.num_classes,
            k,
            cumulative_ratio: pca.cumulative_ratio(),
            explained_variance: pca.explained_variance,
            explained_variance_ratio: pca.explained_variance_ratio,
            iterations: pca.iterations,
        });
    }
    write_json(&out.join("pca_report.json"), &entries)?;
    write_csv(&out.join("pca_report.csv"), &rows)?;
    manifest.artifacts.extend(["pca_report.json", "pca_report.csv"].map(String::from));
    manifest.metrics =
        json!(entries.iter().map(|e| (e.dataset.clone(), e.cumulative_ratio)).collect::<BTreeMap<_, _>>());
    manifest.finish(&out)
}
