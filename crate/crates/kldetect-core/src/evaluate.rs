//! Stratified cross-validation and confusion-matrix metrics.
//!
//! Aggregate metrics are micro-averaged: the per-fold confusion counts are
//! pooled and the metric formulas applied once to the pooled table.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::classifier::{fit_standardizer, predict, train_svm, SvmHyper};
use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::rng::{derived_rng, mix_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Metrics for the positive (compromised) class. A zero-denominator
/// precision or recall is reported as 0 with the corresponding flag set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

impl Metrics {
    pub fn from_counts(counts: ConfusionCounts) -> Metrics {
        let total = counts.total();
        debug_assert!(total > 0);
        let accuracy = (counts.tp + counts.tn) as f64 / total as f64;
        let p_den = counts.tp + counts.fp;
        let r_den = counts.tp + counts.fn_;
        let precision = if p_den == 0 { 0.0 } else { counts.tp as f64 / p_den as f64 };
        let recall = if r_den == 0 { 0.0 } else { counts.tp as f64 / r_den as f64 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            accuracy,
            precision,
            recall,
            f1,
            counts,
            precision_degenerate: p_den == 0,
            recall_degenerate: r_den == 0,
        }
    }
}

/// Confusion-matrix metrics of one prediction vector against gold labels.
pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics, Error> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(
            "label vectors must be non-empty and equal length".to_string(),
        ));
    }
    let mut counts = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t != 0, p != 0) {
            (true, true) => counts.tp += 1,
            (false, true) => counts.fp += 1,
            (true, false) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(Metrics::from_counts(counts))
}

/// One `(train_indices, test_indices)` split.
pub type FoldSplit = (Vec<usize>, Vec<usize>);

/// Stratified k-fold splits as `(train_indices, test_indices)` pairs.
///
/// Each class's indices are shuffled with the seeded generator and dealt
/// round-robin, so fold class counts differ by at most one and every index
/// appears in exactly one test fold.
pub fn stratified_kfold(
    ids: &[String],
    labels: &[u8],
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>, Error> {
    if ids.len() != labels.len() || ids.is_empty() {
        return Err(Error::ShapeMismatch(
            "ids and labels must be non-empty and equal length".to_string(),
        ));
    }
    if k < 2 {
        return Err(Error::InvalidConfig("k-fold needs k >= 2".to_string()));
    }
    let mut rng = derived_rng(seed, 0x6b_666f_6c64);
    let mut test_folds: Vec<Vec<usize>> = alloc::vec![Vec::new(); k];
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..ids.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassSmallerThanK {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            test_folds[pos % k].push(idx);
        }
    }
    let splits = test_folds
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..ids.len()).filter(|i| test.binary_search(i).is_err()).collect();
            (train, test)
        })
        .collect();
    Ok(splits)
}

/// Per-fold metrics plus the micro-aggregated total.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub per_fold: Vec<Metrics>,
    pub aggregate: Metrics,
}

/// One grid cell's report: metadata plus cross-validation metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub feature_set: String,
    pub ratio_mode: String,
    pub seed: u64,
    pub cv: CvResult,
}

/// Runs stratified k-fold cross-validation.
///
/// `featurize` receives each fold's training row indices and must return the
/// full matrix (rows aligned with `ids`); families whose extraction is
/// unsupervised ignore the indices, while supervised-selection families refit
/// on them so test information never leaks into fitting. Standardization and
/// the SVM are refit per fold; the per-fold SVM seed is derived from the fold
/// index.
pub fn run_cv<F>(
    ids: &[String],
    labels: &[u8],
    k: usize,
    seed: u64,
    hyper: &SvmHyper,
    mut featurize: F,
) -> Result<CvResult, Error>
where
    F: FnMut(&[usize]) -> Result<FeatureMatrix, Error>,
{
    let folds = stratified_kfold(ids, labels, k, seed)?;
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut pooled = ConfusionCounts::default();
    for (fold_idx, (train, test)) in folds.iter().enumerate() {
        let matrix = featurize(train)?;
        matrix.validate()?;
        if matrix.ids != ids {
            return Err(Error::ShapeMismatch(
                "featurize returned rows out of account order".to_string(),
            ));
        }
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| matrix.rows[i].clone()).collect();
        let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let standardizer = fit_standardizer(&train_rows)?;
        let x_train = standardizer.transform(&train_rows)?;
        let fold_hyper = SvmHyper {
            seed: mix_seed(hyper.seed, fold_idx as u64),
            ..*hyper
        };
        let model = train_svm(&x_train, &train_labels, &fold_hyper)?;

        let test_rows: Vec<Vec<f64>> = test.iter().map(|&i| matrix.rows[i].clone()).collect();
        let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
        let x_test = standardizer.transform(&test_rows)?;
        let (pred, _) = predict(&model, &x_test)?;
        let metrics = compute_metrics(&test_labels, &pred)?;
        pooled.add(&metrics.counts);
        per_fold.push(metrics);
    }
    Ok(CvResult {
        per_fold,
        aggregate: Metrics::from_counts(pooled),
    })
}

/// Cross-validation over a fixed, fold-independent feature matrix.
pub fn run_cv_matrix(
    matrix: &FeatureMatrix,
    k: usize,
    seed: u64,
    hyper: &SvmHyper,
) -> Result<CvResult, Error> {
    matrix.validate()?;
    run_cv(&matrix.ids, &matrix.labels, k, seed, hyper, |_| Ok(matrix.clone()))
}
