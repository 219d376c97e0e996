//! k-nearest-neighbor classification: leave-one-out cross-validation on the
//! training set (the fitness signal) and train-to-test evaluation (the
//! reporting signal).
//!
//! Distances are full pairwise Euclidean over the selected feature columns;
//! with at most a few hundred instances, brute force is exact and fast.
//! Neighbor ties break by (distance, instance index) and vote ties go to the
//! class of the nearest tied neighbor, so every prediction is deterministic.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Loss definition used as the classification objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMetric {
    /// `1 - macro F1`, matching an F1-score quality objective.
    #[default]
    OneMinusMacroF1,
    /// Plain misclassification rate.
    ErrorRate,
}

/// kNN configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub k: usize,
    pub loss_metric: LossMetric,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            k: 5,
            loss_metric: LossMetric::OneMinusMacroF1,
        }
    }
}

/// Outcome of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// The configured loss metric's value, in `[0,1]`.
    pub loss: f64,
    pub error_rate: f64,
    pub macro_f1: f64,
    /// `confusion[true_class][predicted_class]` counts.
    pub confusion: Vec<Vec<usize>>,
}

/// Unweighted mean of per-class F1 scores. Degenerate classes (never
/// predicted and never present) score 0 and stay in the mean.
pub fn macro_f1(confusion: &[Vec<usize>]) -> f64 {
    let c = confusion.len();
    if c == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for class in 0..c {
        let tp = confusion[class][class] as f64;
        let row: usize = confusion[class].iter().sum();
        let col: usize = confusion.iter().map(|r| r[class]).sum();
        let precision = if col > 0 { tp / col as f64 } else { 0.0 };
        let recall = if row > 0 { tp / row as f64 } else { 0.0 };
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    sum / c as f64
}

/// Leave-one-out kNN evaluation on the training set: each instance is
/// classified by its `k` nearest other instances over the selected features.
pub fn loocv_eval(train: &Dataset, mask: &FeatureMask, cfg: &ClassifierConfig) -> Result<EvalResult> {
    check_mask(train, mask)?;
    let n = train.n_instances();
    if cfg.k == 0 || cfg.k >= n {
        return Err(Error::InvalidConfig(format!(
            "k = {} must satisfy 1 <= k < {n} for leave-one-out evaluation",
            cfg.k
        )));
    }
    let points = gather(train, mask);
    let m = mask.count_ones();

    // Symmetric pairwise distances, each pair computed once.
    let mut distances = vec![0.0f64; n * n];
    for i in 0..n {
        let query = &points[i * m..(i + 1) * m];
        for j in (i + 1)..n {
            let d = sq_dist(query, &points[j * m..(j + 1) * m]);
            distances[i * n + j] = d;
            distances[j * n + i] = d;
        }
    }

    let mut confusion = vec![vec![0usize; train.n_classes()]; train.n_classes()];
    let mut neighbors: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut counts = vec![0usize; train.n_classes()];
    for i in 0..n {
        neighbors.clear();
        neighbors.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (distances[i * n + j], j)),
        );
        let predicted = vote(&mut neighbors, cfg.k, train.labels(), &mut counts);
        confusion[train.labels()[i] as usize][predicted as usize] += 1;
    }
    Ok(finish(confusion, cfg))
}

/// Classifies every test instance by its `k` nearest training instances over
/// the selected features.
pub fn test_eval(
    train: &Dataset,
    test: &Dataset,
    mask: &FeatureMask,
    cfg: &ClassifierConfig,
) -> Result<EvalResult> {
    check_mask(train, mask)?;
    if train.n_features() != test.n_features() {
        return Err(Error::InvalidArgument(format!(
            "train has {} features but test has {}",
            train.n_features(),
            test.n_features()
        )));
    }
    let n_train = train.n_instances();
    if cfg.k == 0 || cfg.k > n_train {
        return Err(Error::InvalidConfig(format!(
            "k = {} must satisfy 1 <= k <= {n_train}",
            cfg.k
        )));
    }
    let m = mask.count_ones();
    let train_pts = gather(train, mask);
    let test_pts = gather(test, mask);
    let classes = train.n_classes().max(test.n_classes());
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut neighbors: Vec<(f64, usize)> = Vec::with_capacity(n_train);
    let mut counts = vec![0usize; classes];
    for i in 0..test.n_instances() {
        neighbors.clear();
        let query = &test_pts[i * m..(i + 1) * m];
        for j in 0..n_train {
            neighbors.push((sq_dist(query, &train_pts[j * m..(j + 1) * m]), j));
        }
        let predicted = vote(&mut neighbors, cfg.k, train.labels(), &mut counts);
        confusion[test.labels()[i] as usize][predicted as usize] += 1;
    }
    Ok(finish(confusion, cfg))
}

fn check_mask(dataset: &Dataset, mask: &FeatureMask) -> Result<()> {
    if mask.width() != dataset.n_features() {
        return Err(Error::InvalidArgument(format!(
            "mask width {} does not match dataset feature count {}",
            mask.width(),
            dataset.n_features()
        )));
    }
    if mask.count_ones() == 0 {
        return Err(Error::InvalidArgument("mask selects no features".into()));
    }
    Ok(())
}

/// Copies the selected columns into a dense row-major scratch matrix so that
/// the distance loop runs over contiguous memory.
fn gather(dataset: &Dataset, mask: &FeatureMask) -> Vec<f64> {
    let cols: Vec<usize> = mask.iter_ones().collect();
    let mut out = Vec::with_capacity(dataset.n_instances() * cols.len());
    for i in 0..dataset.n_instances() {
        let row = dataset.row(i);
        out.extend(cols.iter().map(|&c| row[c]));
    }
    out
}

/// Squared Euclidean distance with four independent accumulators, so the
/// reduction vectorizes despite strict floating-point semantics. The lane
/// split is fixed, keeping results bit-deterministic.
#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane] - b[i + lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Picks the k nearest neighbors under the (distance, index) order and
/// returns the majority class; on a vote tie the class of the nearest tied
/// neighbor wins. `counts` is a reused per-class scratch buffer.
fn vote(neighbors: &mut [(f64, usize)], k: usize, labels: &[u32], counts: &mut [usize]) -> u32 {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
    };
    let k = k.min(neighbors.len());
    if k < neighbors.len() {
        neighbors.select_nth_unstable_by(k - 1, cmp);
    }
    let top = &mut neighbors[..k];
    top.sort_unstable_by(cmp);

    counts.fill(0);
    for &(_, j) in top.iter() {
        counts[labels[j] as usize] += 1;
    }
    let best = counts.iter().copied().max().unwrap();
    top.iter()
        .map(|&(_, j)| labels[j])
        .find(|&class| counts[class as usize] == best)
        .unwrap()
}

fn finish(confusion: Vec<Vec<usize>>, cfg: &ClassifierConfig) -> EvalResult {
    let total: usize = confusion.iter().map(|r| r.iter().sum::<usize>()).sum();
    let correct: usize = (0..confusion.len()).map(|c| confusion[c][c]).sum();
    let error_rate = if total > 0 {
        1.0 - correct as f64 / total as f64
    } else {
        0.0
    };
    let f1 = macro_f1(&confusion);
    let loss = match cfg.loss_metric {
        LossMetric::OneMinusMacroF1 => 1.0 - f1,
        LossMetric::ErrorRate => error_rate,
    };
    EvalResult {
        loss,
        error_rate,
        macro_f1: f1,
        confusion,
    }
}
