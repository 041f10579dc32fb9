//! Confusion-matrix metrics and ROC / precision-recall curves.
//!
//! Averaging convention: accuracy, recall and F1 are micro-averaged (and so
//! always coincide), while the reported precision column is the macro
//! average of per-class precisions. A class that is never predicted
//! contributes precision 0 to that average.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub num_classes: usize,
    /// Row-major, rows = true class, columns = predicted class.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            bail!(InvalidArgument, "{} labels but {} predictions", truth.len(), predicted.len());
        }
        if num_classes == 0 {
            bail!(InvalidArgument, "num_classes must be positive");
        }
        let mut counts = vec![0u64; num_classes * num_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= num_classes || p >= num_classes {
                bail!(InvalidArgument, "label ({t}, {p}) out of range for {num_classes} classes");
            }
            counts[t * num_classes + p] += 1;
        }
        Ok(Self { num_classes, counts })
    }

    pub fn from_counts(num_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != num_classes * num_classes {
            bail!(InvalidArgument, "expected {} counts, got {}", num_classes * num_classes, counts.len());
        }
        Ok(Self { num_classes, counts })
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|k| self.get(k, k)).sum()
    }

    pub fn tp(&self, k: usize) -> u64 {
        self.get(k, k)
    }

    pub fn fn_(&self, k: usize) -> u64 {
        self.row_sum(k) - self.get(k, k)
    }

    pub fn fp(&self, k: usize) -> u64 {
        self.col_sum(k) - self.get(k, k)
    }

    pub fn tn(&self, k: usize) -> u64 {
        self.total() + self.get(k, k) - self.row_sum(k) - self.col_sum(k)
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k * self.num_classes..(k + 1) * self.num_classes].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        (0..self.num_classes).map(|t| self.get(t, k)).sum()
    }

    /// Rows as nested vectors, for serialization.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.num_classes).map(|r| r.to_vec()).collect()
    }
}

pub fn confusion_matrix(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    ConfusionMatrix::new(truth, predicted, num_classes)
}

/// Accuracy, precision, recall, F1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSet {
    pub acc: f64,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

impl MetricSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.acc, self.p, self.r, self.f1]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { acc: a[0], p: a[1], r: a[2], f1: a[3] }
    }
}

/// Micro-pooled metrics: sums TP, FP and FN over classes before dividing.
pub fn micro_metrics(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let total = cm.total();
    if total == 0 {
        bail!(UndefinedMetric, "empty confusion matrix");
    }
    let tp = cm.trace() as f64;
    // Pooled over classes every off-diagonal count is one FP and one FN.
    let off = (total - cm.trace()) as f64;
    let acc = tp / total as f64;
    let p = tp / (tp + off);
    let r = tp / (tp + off);
    // p == r, so the harmonic mean is p itself; computing it as 2pr/(p+r)
    // would only add rounding.
    Ok(MetricSet { acc, p, r, f1: p })
}

pub fn per_class_precision(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.num_classes)
        .map(|k| {
            let predicted = cm.col_sum(k);
            if predicted == 0 { 0.0 } else { cm.tp(k) as f64 / predicted as f64 }
        })
        .collect()
}

pub fn per_class_recall(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.num_classes)
        .map(|k| {
            let actual = cm.row_sum(k);
            if actual == 0 { 0.0 } else { cm.tp(k) as f64 / actual as f64 }
        })
        .collect()
}

pub fn macro_precision(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        bail!(UndefinedMetric, "empty confusion matrix");
    }
    Ok(per_class_precision(cm).iter().sum::<f64>() / cm.num_classes as f64)
}

/// The reported metric row: micro accuracy, recall and F1 with macro precision.
pub fn report_metrics(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let micro = micro_metrics(cm)?;
    Ok(MetricSet { p: macro_precision(cm)?, ..micro })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Curve {
    pub kind: CurveKind,
    /// `(x, y)`: `(FPR, TPR)` for ROC, `(recall, precision)` for PR.
    pub points: Vec<(f64, f64)>,
    /// Score threshold producing each point (`+inf` for the ROC origin).
    pub thresholds: Vec<f64>,
    pub area: f64,
    /// Positive prevalence; the chance level of a PR curve.
    pub baseline: f64,
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

fn check_scores(scores: &[f64], truth: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != truth.len() {
        bail!(InvalidArgument, "{} scores but {} labels", scores.len(), truth.len());
    }
    if scores.iter().any(|s| s.is_nan()) {
        bail!(InvalidData, "NaN score");
    }
    let pos = truth.iter().filter(|&&t| t).count();
    Ok((pos, truth.len() - pos))
}

/// Cumulative `(threshold, tp, fp)` at each distinct score, highest first.
fn threshold_counts(scores: &[f64], truth: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (pos, &i) in order.iter().enumerate() {
        if truth[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = pos + 1 == order.len() || scores[order[pos + 1]] != scores[i];
        if last_of_group {
            out.push((scores[i], tp, fp));
        }
    }
    out
}

/// ROC curve over every distinct score, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<Curve> {
    let (pos, neg) = check_scores(scores, truth)?;
    if pos == 0 || neg == 0 {
        bail!(UndefinedMetric, "ROC needs both classes ({pos} positive, {neg} negative)");
    }
    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    for (t, tp, fp) in threshold_counts(scores, truth) {
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(t);
    }
    let area = trapezoid(&points).clamp(0.0, 1.0);
    Ok(Curve { kind: CurveKind::Roc, points, thresholds, area, baseline: pos as f64 / truth.len() as f64 })
}

/// Precision-recall curve in ascending recall. The first point is
/// `(0, precision at the highest threshold)`, so a single-threshold curve
/// integrates to its precision.
pub fn pr_curve(scores: &[f64], truth: &[bool]) -> Result<Curve> {
    let (pos, _) = check_scores(scores, truth)?;
    if pos == 0 {
        bail!(UndefinedMetric, "precision-recall needs at least one positive");
    }
    let counts = threshold_counts(scores, truth);
    let mut points = Vec::with_capacity(counts.len() + 1);
    let mut thresholds = Vec::with_capacity(counts.len() + 1);
    for (t, tp, fp) in counts {
        let precision = tp as f64 / (tp + fp) as f64;
        if points.is_empty() {
            points.push((0.0, precision));
            thresholds.push(t);
        }
        points.push((tp as f64 / pos as f64, precision));
        thresholds.push(t);
    }
    let area = trapezoid(&points).clamp(0.0, 1.0);
    Ok(Curve { kind: CurveKind::Pr, points, thresholds, area, baseline: pos as f64 / truth.len() as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvrAreas {
    pub mean_auroc: f64,
    pub mean_auprc: f64,
    /// `None` for a class absent from `truth`; such classes are left out of the means.
    pub per_class_auroc: Vec<Option<f64>>,
    pub per_class_auprc: Vec<Option<f64>>,
    pub roc_curves: Vec<Option<Curve>>,
    pub pr_curves: Vec<Option<Curve>>,
}

/// One-vs-rest areas from an `m x C` row-major probability matrix.
pub fn ovr_areas(probabilities: &[f64], truth: &[usize], num_classes: usize) -> Result<OvrAreas> {
    if num_classes < 2 || probabilities.len() != truth.len() * num_classes {
        bail!(InvalidArgument, "probability matrix is not {} x {num_classes}", truth.len());
    }
    let mut out = OvrAreas {
        mean_auroc: 0.0,
        mean_auprc: 0.0,
        per_class_auroc: Vec::new(),
        per_class_auprc: Vec::new(),
        roc_curves: Vec::new(),
        pr_curves: Vec::new(),
    };
    let mut present = 0;
    for k in 0..num_classes {
        let scores: Vec<f64> = probabilities.chunks(num_classes).map(|row| row[k]).collect();
        let bin: Vec<bool> = truth.iter().map(|&t| t == k).collect();
        match (roc_curve(&scores, &bin), pr_curve(&scores, &bin)) {
            (Ok(roc), Ok(pr)) => {
                present += 1;
                out.mean_auroc += roc.area;
                out.mean_auprc += pr.area;
                out.per_class_auroc.push(Some(roc.area));
                out.per_class_auprc.push(Some(pr.area));
                out.roc_curves.push(Some(roc));
                out.pr_curves.push(Some(pr));
            }
            (Err(e @ crate::Error::InvalidData(_)), _) => return Err(e),
            _ => {
                out.per_class_auroc.push(None);
                out.per_class_auprc.push(None);
                out.roc_curves.push(None);
                out.pr_curves.push(None);
            }
        }
    }
    if present == 0 {
        bail!(UndefinedMetric, "no class has both positives and negatives");
    }
    out.mean_auroc /= present as f64;
    out.mean_auprc /= present as f64;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassBreakdown {
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Everything reported for one evaluated split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    /// `None` when the split lacks a class needed for the curve.
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    /// One curve for binary tasks; one per class (OvR) otherwise.
    pub roc_curves: Vec<Option<Curve>>,
    pub pr_curves: Vec<Option<Curve>>,
    pub per_class: Vec<ClassBreakdown>,
}

impl EvalReport {
    /// `probabilities` is `m x C` row-major. For two classes the positive
    /// score is the class-1 probability.
    pub fn from_predictions(truth: &[usize], predicted: &[usize], probabilities: &[f64], num_classes: usize) -> Result<Self> {
        let confusion = ConfusionMatrix::new(truth, predicted, num_classes)?;
        let metrics = report_metrics(&confusion)?;
        if probabilities.len() != truth.len() * num_classes {
            bail!(InvalidArgument, "probability matrix is not {} x {num_classes}", truth.len());
        }
        let (auroc, auprc, roc_curves, pr_curves) = if num_classes == 2 {
            let scores: Vec<f64> = probabilities.chunks(2).map(|r| r[1]).collect();
            let bin: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
            let roc = optional(roc_curve(&scores, &bin))?;
            let pr = optional(pr_curve(&scores, &bin))?;
            (roc.as_ref().map(|c| c.area), pr.as_ref().map(|c| c.area), vec![roc], vec![pr])
        } else {
            match optional(ovr_areas(probabilities, truth, num_classes))? {
                Some(o) => (Some(o.mean_auroc), Some(o.mean_auprc), o.roc_curves, o.pr_curves),
                None => (None, None, vec![None; num_classes], vec![None; num_classes]),
            }
        };
        let precision = per_class_precision(&confusion);
        let recall = per_class_recall(&confusion);
        let per_class = (0..num_classes)
            .map(|k| {
                let (p, r) = (precision[k], recall[k]);
                ClassBreakdown {
                    support: confusion.row_sum(k),
                    precision: p,
                    recall: r,
                    f1: if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 },
                }
            })
            .collect();
        Ok(Self { confusion, metrics, auroc, auprc, roc_curves, pr_curves, per_class })
    }
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(crate::Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
