//! JSON and CSV artifact layouts shared by the commands.

use std::path::Path;

use cvqnn_core::metrics::{Curve, EvalReport, MetricSet};
use cvqnn_core::train::{EpochRecord, Evaluation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Serializes `rows` with a header row.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("CSV rows serialize");
    }
    w.into_inner().expect("in-memory CSV writer flushes")
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    write_file(path, &csv_bytes(rows))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    csv::Reader::from_reader(text.as_slice())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Headline test-set numbers in the order of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub acc: f64,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

impl TableRow {
    pub fn new(report: &EvalReport) -> Self {
        let MetricSet { acc, p, r, f1 } = report.metrics;
        Self { acc, p, r, f1, auroc: report.auroc, auprc: report.auprc }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: usize,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

/// Contents of `eval.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub dataset: String,
    pub split: String,
    pub model: String,
    pub num_samples: u64,
    pub num_classes: usize,
    pub loss: f64,
    #[serde(flatten)]
    pub row: TableRow,
    /// Rows are true classes, columns predictions.
    pub confusion_matrix: Vec<Vec<u64>>,
    pub per_class: Vec<ClassRow>,
}

impl EvalSummary {
    pub fn new(dataset: &str, split: &str, model: &str, eval: &Evaluation) -> Self {
        let rep = &eval.report;
        let c = rep.confusion.num_classes;
        // Binary reports carry a single curve for class 1.
        let area = |curves: &[Option<Curve>], k: usize| {
            let i = if c == 2 { (k == 1).then_some(0) } else { Some(k) };
            i.and_then(|i| curves.get(i)).and_then(|c| c.as_ref()).map(|c| c.area)
        };
        let per_class = rep
            .per_class
            .iter()
            .enumerate()
            .map(|(k, b)| ClassRow {
                class: k,
                support: b.support,
                precision: b.precision,
                recall: b.recall,
                f1: b.f1,
                auroc: area(&rep.roc_curves, k),
                auprc: area(&rep.pr_curves, k),
            })
            .collect();
        Self {
            dataset: dataset.to_string(),
            split: split.to_string(),
            model: model.to_string(),
            num_samples: rep.confusion.total(),
            num_classes: c,
            loss: eval.loss,
            row: TableRow::new(rep),
            confusion_matrix: rep.confusion.rows(),
            per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub class: usize,
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

/// Flattens ROC or PR curves; binary curves are labeled class 1.
pub fn curve_rows(curves: &[Option<Curve>], num_classes: usize) -> Vec<CurveRow> {
    let mut out = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        let Some(curve) = curve else { continue };
        let class = if num_classes == 2 { 1 } else { i };
        for (&(x, y), &threshold) in curve.points.iter().zip(&curve.thresholds) {
            out.push(CurveRow { class, x, y, threshold });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub acc: f64,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

/// Two rows per epoch: `train` then `val`.
pub fn training_curve_rows(curves: &[EpochRecord]) -> Vec<CurvePoint> {
    let row = |epoch, split: &str, loss, m: MetricSet| CurvePoint {
        epoch,
        split: split.to_string(),
        loss,
        acc: m.acc,
        p: m.p,
        r: m.r,
        f1: m.f1,
    };
    curves
        .iter()
        .flat_map(|e| [row(e.epoch, "train", e.train_loss, e.train), row(e.epoch, "val", e.val_loss, e.val)])
        .collect()
}

/// One line of `folds.csv`: validation metrics of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub dataset: String,
    pub model: String,
    pub fold: usize,
    pub acc: f64,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub sigma: f64,
    pub model_kind: String,
    pub f1: f64,
}
