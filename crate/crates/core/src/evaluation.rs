//! Repeated leave-one-out cross-validation and accuracy summaries.

use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::forest::{train_forest, ForestConfig, ForestError};
use crate::model::Scale;
use crate::scalar::{total_cmp, Scalar};
use crate::seed::{derive_seed, derive_seed_str};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("leave-one-out needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("{0} labels for {1} rows")]
    ShapeMismatch(usize, usize),
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("cv report: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Outcome of one leave-one-out pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LoocvResult<T> {
    pub accuracy: T,
    /// Prediction for every row when it was held out, in row order.
    pub predictions: Vec<bool>,
    /// Folds whose training split had a single class and predicted it directly.
    pub fallback_folds: usize,
}

/// Leave-one-out over all rows. The forest of the fold holding out a
/// participant is seeded from `(rep_seed, participant_id)`, so results do not
/// depend on row order.
pub fn loocv<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    labels: &[bool],
    forest: &ForestConfig,
    rep_seed: u64,
) -> Result<LoocvResult<T>, EvalError> {
    let n = matrix.n_rows();
    if labels.len() != n {
        return Err(EvalError::ShapeMismatch(labels.len(), n));
    }
    if n < 2 {
        return Err(EvalError::TooFewRows(n));
    }
    // Training sets are assembled in participant-id order so bootstrap draws
    // do not depend on the order of the input rows.
    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by(|&a, &b| matrix.participant_ids[a].cmp(&matrix.participant_ids[b]));
    let folds: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|held| -> Result<(bool, bool), ForestError> {
            let train: Vec<usize> = by_id.iter().copied().filter(|&i| i != held).collect();
            let train_rows: Vec<Vec<T>> = train.iter().map(|&i| matrix.rows[i].clone()).collect();
            let train_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let positives = train_labels.iter().filter(|&&l| l).count();
            if positives == 0 || positives == train_labels.len() {
                log::warn!(
                    "fold holding out {}: single-class training split, predicting the majority class",
                    matrix.participant_ids[held]
                );
                return Ok((positives > 0, true));
            }
            let seed = derive_seed_str(rep_seed, &matrix.participant_ids[held]);
            let f = train_forest(&train_rows, &train_labels, &forest.with_seed(seed))?;
            Ok((f.predict(&matrix.rows[held]).label, false))
        })
        .collect::<Result<_, _>>()?;
    let correct = folds
        .iter()
        .zip(labels)
        .filter(|((p, _), &l)| *p == l)
        .count();
    Ok(LoocvResult {
        accuracy: T::from_usize_lossy(correct) / T::from_usize_lossy(n),
        predictions: folds.iter().map(|(p, _)| *p).collect(),
        fallback_folds: folds.iter().filter(|(_, fb)| *fb).count(),
    })
}

/// Box-plot statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumberSummary<T> {
    pub min: T,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub max: T,
}

/// Quantile by linear interpolation between order statistics at position `p·(n−1)`.
pub fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::from_f64_lossy(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn five_number_summary<T: Scalar>(values: &[T]) -> Option<FiveNumberSummary<T>> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(total_cmp);
    Some(FiveNumberSummary {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport<T> {
    pub target: Option<Scale>,
    pub per_repetition_accuracy: Vec<T>,
    pub mean: T,
    pub summary: FiveNumberSummary<T>,
    /// Accuracy of always predicting the more frequent class.
    pub majority_baseline: T,
    /// Recall of each class pooled over all repetitions; `None` when the class is absent.
    pub positive_recall: Option<T>,
    pub negative_recall: Option<T>,
    pub n_rows: usize,
}

/// `reps` leave-one-out passes with repetition seeds derived from `(master_seed, rep)`.
pub fn repeated_cv<T: Scalar>(
    matrix: &FeatureMatrix<T>,
    labels: &[bool],
    forest: &ForestConfig,
    reps: usize,
    master_seed: u64,
) -> Result<CvReport<T>, EvalError> {
    if reps == 0 {
        return Err(EvalError::NoRepetitions);
    }
    let runs: Vec<LoocvResult<T>> = (0..reps)
        .map(|r| loocv(matrix, labels, forest, derive_seed(master_seed, r as u64)))
        .collect::<Result<_, _>>()?;
    let accs: Vec<T> = runs.iter().map(|r| r.accuracy).collect();
    let mean = accs.iter().copied().sum::<T>() / T::from_usize_lossy(reps);
    let n = labels.len();
    let positives = labels.iter().filter(|&&l| l).count();
    let recall = |class: bool| {
        let support = labels.iter().filter(|&&l| l == class).count() * reps;
        let hits: usize = runs
            .iter()
            .map(|r| {
                r.predictions
                    .iter()
                    .zip(labels)
                    .filter(|(&p, &l)| l == class && p == class)
                    .count()
            })
            .sum();
        (support > 0).then(|| T::from_usize_lossy(hits) / T::from_usize_lossy(support))
    };
    Ok(CvReport {
        target: None,
        summary: five_number_summary(&accs).expect("reps > 0"),
        per_repetition_accuracy: accs,
        mean,
        majority_baseline: T::from_usize_lossy(positives.max(n - positives))
            / T::from_usize_lossy(n),
        positive_recall: recall(true),
        negative_recall: recall(false),
        n_rows: n,
    })
}

impl<T: Scalar> CvReport<T> {
    pub fn with_target(self, target: Scale) -> Self {
        CvReport {
            target: Some(target),
            ..self
        }
    }
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{:.4}", x.to_f64_lossy()))
}

/// CSV with one row per report: target, mean, five-number summary,
/// baseline, class recalls and the `;`-joined per-repetition accuracies.
pub fn write_cv_csv<T: Scalar, W: io::Write>(
    writer: W,
    reports: &[CvReport<T>],
) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "target",
        "mean",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "majority_baseline",
        "positive_recall",
        "negative_recall",
        "accuracies",
    ])?;
    for r in reports {
        let f = |v: T| format!("{:.4}", v.to_f64_lossy());
        let s = &r.summary;
        w.write_record([
            r.target.map_or_else(String::new, |t| t.name().to_string()),
            f(r.mean),
            f(s.min),
            f(s.q1),
            f(s.median),
            f(s.q3),
            f(s.max),
            f(r.majority_baseline),
            fmt_opt(r.positive_recall),
            fmt_opt(r.negative_recall),
            r.per_repetition_accuracy
                .iter()
                .map(|&a| f(a))
                .collect::<Vec<_>>()
                .join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Accuracy table, one row per model, percentages with one decimal.
pub fn format_cv_table<T: Scalar>(reports: &[CvReport<T>]) -> String {
    let pct = |v: T| format!("{:.1}", 100.0 * v.to_f64_lossy());
    let mut s = format!(
        "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
        "model", "accuracy", "min", "q1", "median", "q3", "max", "baseline"
    );
    for r in reports {
        let name = r.target.map_or("-", |t| t.name());
        s.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            name,
            pct(r.mean),
            pct(r.summary.min),
            pct(r.summary.q1),
            pct(r.summary.median),
            pct(r.summary.q3),
            pct(r.summary.max),
            pct(r.majority_baseline)
        ));
    }
    s
}
