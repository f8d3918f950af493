//! Challenge performance measure and its constituents, plus logarithmic
//! class weighting for imbalanced training sets.
//!
//! `cpm = 0.67 * weighted_f1 + 0.33 * accuracy`, where the weighted F1 is the
//! support-weighted mean of per-class F1 scores.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Label, LabelTrack, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::textio::write_atomic;

pub const F1_COEFFICIENT: f64 = 0.67;
pub const ACCURACY_COEFFICIENT: f64 = 0.33;

/// Default `r` of the logarithmic class weighting.
pub const DEFAULT_LOG_WEIGHT_R: f64 = 0.47;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Rows are truth, columns are predictions.
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub per_class_f1: Vec<f64>,
    pub weighted_f1: f64,
    pub cpm: f64,
    pub support: Vec<u64>,
}

impl EvalReport {
    pub fn total(&self) -> u64 {
        self.support.iter().sum()
    }

    /// Report JSON with reals fixed to six decimals.
    pub fn to_json(&self) -> String {
        let reals = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",");
        let ints = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let mut out = String::from("{\"confusion\":[");
        for (i, row) in self.confusion.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "[{}]", ints(row)).unwrap();
        }
        write!(
            out,
            "],\"accuracy\":{:.6},\"per_class_f1\":[{}],\"weighted_f1\":{:.6},\"cpm\":{:.6},\"support\":[{}]}}",
            self.accuracy,
            reals(&self.per_class_f1),
            self.weighted_f1,
            self.cpm,
            ints(&self.support)
        )
        .unwrap();
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json();
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

/// Combines weighted F1 and accuracy into the challenge measure.
#[inline]
pub fn cpm(weighted_f1: f64, accuracy: f64) -> f64 {
    F1_COEFFICIENT * weighted_f1 + ACCURACY_COEFFICIENT * accuracy
}

/// Scores per-frame class predictions against a label track; ignored frames
/// are excluded from every count.
pub fn evaluate(predictions: &[usize], truth: &LabelTrack) -> Result<EvalReport> {
    evaluate_labels(predictions, truth.labels(), NUM_CLASSES)
}

/// [`evaluate`] over a bare label slice with `num_classes` classes.
pub fn evaluate_labels(predictions: &[usize], truth: &[Label], num_classes: usize) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for (t, (&p, &y)) in predictions.iter().zip(truth).enumerate() {
        if p >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "prediction {p} at frame {t} is not a class index"
            )));
        }
        if let Some(y) = y {
            if y >= num_classes {
                return Err(Error::InvalidArgument(format!("label {y} at frame {t} is not a class index")));
            }
            confusion[y][p] += 1;
        }
    }
    from_confusion(confusion)
}

/// Derives every report field from a confusion matrix.
pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<EvalReport> {
    let k = confusion.len();
    let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let total: u64 = support.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no labelled frames to evaluate".into()));
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / total as f64;

    let per_class_f1: Vec<f64> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
            if tp == 0 {
                return 0.0;
            }
            let precision = tp as f64 / predicted as f64;
            let recall = tp as f64 / support[c] as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .collect();
    let weighted_f1 = per_class_f1
        .iter()
        .zip(&support)
        .map(|(f, &s)| f * s as f64)
        .sum::<f64>()
        / total as f64;

    Ok(EvalReport {
        confusion,
        accuracy,
        per_class_f1,
        weighted_f1,
        cpm: cpm(weighted_f1, accuracy),
        support,
    })
}

/// Per-class loss weights `max(1, ln(r * N / n_k))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub r: f64,
    pub weights: Vec<f64>,
}

pub fn log_class_weights(counts: &[u64], r: f64) -> Result<ClassWeights> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    if counts.is_empty() {
        return Err(Error::Empty("no class counts".into()));
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "class {k} has no samples; merge or drop it before weighting"
        )));
    }
    let total = counts.iter().sum::<u64>() as f64;
    let weights = counts
        .iter()
        .map(|&c| (r * total / c as f64).ln().max(1.0))
        .collect();
    Ok(ClassWeights { r, weights })
}

/// Occurrences of each class among the non-ignored labels.
pub fn class_counts(labels: &[Label], num_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; num_classes];
    for &k in labels.iter().flatten() {
        if k < num_classes {
            counts[k] += 1;
        }
    }
    counts
}
