//! Maximal information coefficient: grid-normalized mutual information
//! maximized over partition sizes `p x q` with `p*q <= n^alpha`.
//!
//! The estimator searches equal-frequency (rank-based) partitions on both
//! axes and additionally optimizes the cut positions of the axis with more
//! bins over a finer grid of candidate edges (`max_clumps_factor` times the
//! bin count worth of equal-frequency superbins) with an exact dynamic
//! program. This is a deterministic, simplified take on the one-axis
//! optimization of the original estimator, not the canonical MINE search.
//! Everything is rank-based, so scores are exactly invariant under strictly
//! monotone transforms and exactly symmetric in the two arguments; with
//! `max_clumps_factor <= 1` the search degenerates to pure equal-frequency
//! partitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Estimator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicConfig {
    /// Grid-size exponent: the partition budget is `B(n) = n^alpha`.
    pub alpha: f64,
    /// Candidate-edge resolution of the refined axis, as a multiple of its
    /// bin count. Values <= 1 disable the refinement.
    pub max_clumps_factor: usize,
}

impl Default for MicConfig {
    fn default() -> Self {
        MicConfig {
            alpha: 0.6,
            max_clumps_factor: 5,
        }
    }
}

impl MicConfig {
    /// Grid budget: `max(n^alpha, 4)`, so a 2x2 grid is always allowed.
    pub fn grid_budget(&self, n: usize) -> f64 {
        (n as f64).powf(self.alpha).max(4.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A MIC value together with the grid shape that achieved it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicScore {
    pub value: f64,
    pub best_grid: (usize, usize),
}

/// Mutual information of a joint count matrix, in nats. `0 * log 0 = 0`.
pub fn mutual_information(joint: &[Vec<usize>]) -> Result<f64> {
    let total: usize = joint.iter().map(|row| row.iter().sum::<usize>()).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("all-zero joint count matrix".into()));
    }
    let cols = joint.first().map(|r| r.len()).unwrap_or(0);
    let mut col_sums = vec![0usize; cols];
    let mut cells = 0.0;
    let mut rows_term = 0.0;
    for row in joint {
        if row.len() != cols {
            return Err(Error::InvalidArgument("ragged joint count matrix".into()));
        }
        let row_sum: usize = row.iter().sum();
        rows_term += xlnx(row_sum);
        for (c, &v) in row.iter().enumerate() {
            col_sums[c] += v;
            cells += xlnx(v);
        }
    }
    let cols_term: f64 = col_sums.iter().map(|&v| xlnx(v)).sum();
    let n = total as f64;
    let mi = (cells - rows_term - cols_term + n * n.ln()) / n;
    Ok(mi.max(0.0))
}

#[inline]
fn xlnx(count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        let c = count as f64;
        c * c.ln()
    }
}

/// Indices of `values` in ascending value order; stable, so equal values keep
/// their input order.
fn rank_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    order
}

/// Interior equal-frequency edge positions for `bins` bins over `n` points
/// sorted as `order`, with each boundary pushed past ties so equal values
/// never straddle a bin edge. Deduplicated and strictly inside (0, n).
fn equal_freq_edges(values: &[f64], order: &[usize], bins: usize) -> Vec<usize> {
    let n = order.len();
    let mut edges = Vec::with_capacity(bins.saturating_sub(1));
    for t in 1..bins {
        let mut pos = t * n / bins;
        while pos > 0 && pos < n && values[order[pos]] == values[order[pos - 1]] {
            pos += 1;
        }
        if pos > 0 && pos < n && edges.last() != Some(&pos) {
            edges.push(pos);
        }
    }
    edges
}

/// Bin index per point for an equal-frequency partition of `values`.
fn equal_freq_assignment(values: &[f64], bins: usize) -> Vec<usize> {
    let order = rank_order(values);
    let edges = equal_freq_edges(values, &order, bins);
    let mut assignment = vec![0usize; values.len()];
    let mut bin = 0usize;
    let mut next_edge = edges.iter().copied().peekable();
    for (pos, &i) in order.iter().enumerate() {
        while next_edge.peek() == Some(&pos) {
            next_edge.next();
            bin += 1;
        }
        assignment[i] = bin;
    }
    assignment
}

/// Maximum MI (nats) over x-partitions into at most `p` bins whose cut
/// positions come from `candidate_edges`, for a fixed y assignment with
/// `q` bins. Exact dynamic program over the candidate segments.
#[allow(clippy::needless_range_loop)]
fn best_mi_over_x_cuts(
    y_bin_in_x_order: &[usize],
    candidate_edges: &[usize],
    p: usize,
    q: usize,
) -> f64 {
    let n = y_bin_in_x_order.len();
    // Segment boundaries: 0, candidates.., n.
    let mut bounds = Vec::with_capacity(candidate_edges.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(candidate_edges);
    bounds.push(n);
    let segments = bounds.len() - 1;

    // prefix[s][b]: count of y-bin b in segments 0..s (exclusive of s).
    let mut prefix = vec![vec![0usize; q]; segments + 1];
    for s in 0..segments {
        let mut row = prefix[s].clone();
        for &yb in &y_bin_in_x_order[bounds[s]..bounds[s + 1]] {
            row[yb] += 1;
        }
        prefix[s + 1] = row;
    }
    let y_margin = &prefix[segments];

    if segments <= p {
        // Every candidate cut is selected (refinement cannot drop cuts
        // without losing information), so the partition is forced. Summing
        // the cells in sorted order makes the value exactly invariant under
        // transposition, which the pure equal-frequency family relies on.
        let mut cells: Vec<usize> = Vec::with_capacity(segments * q);
        for s in 0..segments {
            for b in 0..q {
                cells.push(prefix[s + 1][b] - prefix[s][b]);
            }
        }
        cells.sort_unstable();
        let cell_term: f64 = cells.iter().map(|&c| xlnx(c)).sum();
        let x_term: f64 = (0..segments).map(|s| xlnx(bounds[s + 1] - bounds[s])).sum();
        let y_term: f64 = y_margin.iter().map(|&c| xlnx(c)).sum();
        let nf = n as f64;
        return zero_snap((cell_term - (x_term + y_term) + nf * nf.ln()) / nf);
    }

    let const_term: f64 = n as f64 * (n as f64).ln() - y_margin.iter().map(|&c| xlnx(c)).sum::<f64>();

    // g(a..b): sum_y c_y ln c_y - c ln c for the merged segment span.
    let g = |a: usize, b: usize| -> f64 {
        let mut total = 0usize;
        let mut acc = 0.0;
        for yb in 0..q {
            let c = prefix[b][yb] - prefix[a][yb];
            total += c;
            acc += xlnx(c);
        }
        acc - xlnx(total)
    };

    let t_max = p.min(segments);
    // dp[s] for the current bin count t: best sum of g over 0..s split into t bins.
    let mut dp: Vec<f64> = (1..=segments).map(|s| g(0, s)).collect();
    let mut best = dp[segments - 1];
    for _t in 2..=t_max {
        let mut next = vec![f64::NEG_INFINITY; segments];
        for s in 1..segments {
            let mut m = f64::NEG_INFINITY;
            for u in 0..s {
                let v = dp[u] + g(u + 1, s + 1);
                if v > m {
                    m = v;
                }
            }
            next[s] = m;
        }
        dp = next;
        if dp[segments - 1] > best {
            best = dp[segments - 1];
        }
    }
    zero_snap((best + const_term) / n as f64)
}

/// Clamps negative values and snaps sub-noise residue (independent or
/// degenerate variables cancel only up to rounding) to an exact zero.
#[inline]
fn zero_snap(mi: f64) -> f64 {
    if mi < 1e-9 {
        0.0
    } else {
        mi
    }
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "vectors differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_n {
        return Err(Error::InvalidArgument(format!(
            "need at least {min_n} points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input value".into()));
    }
    Ok(())
}

/// Highest normalized MI over the searched family of `p x q` partitions,
/// divided by `ln min(p, q)`.
///
/// The axis with more bins gets equal-frequency bins refined over the
/// candidate-edge grid; the other axis keeps plain equal-frequency bins.
/// Square grids use plain bins on both axes. Tying the refined axis to the
/// grid shape instead of the argument order makes the searched family, and
/// therefore the score, exactly symmetric in x and y.
pub fn characteristic_value(
    x: &[f64],
    y: &[f64],
    p: usize,
    q: usize,
    cfg: &MicConfig,
) -> Result<f64> {
    check_pair(x, y, 4)?;
    if p < 2 || q < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 2x2, got {p}x{q}"
        )));
    }
    if p == q {
        let plain = MicConfig {
            max_clumps_factor: 1,
            ..*cfg
        };
        let y_bins = equal_freq_assignment(y, q);
        Ok(characteristic_with_y_bins(x, &y_bins, p, q, &plain))
    } else if p > q {
        let y_bins = equal_freq_assignment(y, q);
        Ok(characteristic_with_y_bins(x, &y_bins, p, q, cfg))
    } else {
        let x_bins = equal_freq_assignment(x, p);
        Ok(characteristic_with_y_bins(y, &x_bins, q, p, cfg))
    }
}

/// Same search with a pre-assigned discrete y (used when y is a class label).
fn characteristic_with_y_bins(
    x: &[f64],
    y_bins: &[usize],
    p: usize,
    q: usize,
    cfg: &MicConfig,
) -> f64 {
    let order = rank_order(x);
    let resolution = p * cfg.max_clumps_factor.max(1);
    let candidates = equal_freq_edges(x, &order, resolution.min(x.len()));
    let y_in_x_order: Vec<usize> = order.iter().map(|&i| y_bins[i]).collect();
    // y_bins may use fewer distinct bins than requested; size the count
    // arrays by whichever is larger.
    let bins = q.max(y_bins.iter().copied().max().unwrap_or(0) + 1);
    let mi = best_mi_over_x_cuts(&y_in_x_order, &candidates, p, bins);
    let norm = ((p.min(q)) as f64).ln();
    (mi / norm).clamp(0.0, 1.0)
}

/// MIC of two real vectors: the maximum characteristic value over all grids
/// `p, q >= 2` with `p*q <= B(n)`.
pub fn mic(x: &[f64], y: &[f64], cfg: &MicConfig) -> Result<MicScore> {
    cfg.validate()?;
    check_pair(x, y, 10)?;
    let n = x.len();
    let budget = cfg.grid_budget(n);

    let mut best = MicScore {
        value: 0.0,
        best_grid: (2, 2),
    };
    let mut first = true;
    let p_max = (budget / 2.0).floor() as usize;
    for p in 2..=p_max.max(2) {
        let q_max = (budget / p as f64).floor() as usize;
        if q_max < 2 {
            break;
        }
        for q in 2..=q_max {
            let value = characteristic_value(x, y, p, q, cfg)?;
            if first || value > best.value {
                best = MicScore {
                    value,
                    best_grid: (p, q),
                };
                first = false;
            }
        }
    }
    Ok(best)
}

/// MIC of a feature against a class label. The label is categorical, so the
/// y axis is fixed to one cell per class and only the x axis is partitioned;
/// at least `p = 2` is always searched even when `2 * n_classes` exceeds the
/// grid budget.
pub fn mic_with_label(
    x: &[f64],
    labels: &[u32],
    n_classes: usize,
    cfg: &MicConfig,
) -> Result<MicScore> {
    cfg.validate()?;
    if x.len() != labels.len() {
        return Err(Error::InvalidArgument("feature/label length mismatch".into()));
    }
    if x.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 points, got {}",
            x.len()
        )));
    }
    let budget = cfg.grid_budget(x.len());
    let q = n_classes;
    let y_bins: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let p_max = ((budget / q as f64).floor() as usize).max(2);

    let mut best = MicScore {
        value: 0.0,
        best_grid: (2, q),
    };
    let mut first = true;
    for p in 2..=p_max {
        let value = characteristic_with_y_bins(x, &y_bins, p, q, cfg);
        if first || value > best.value {
            best = MicScore {
                value,
                best_grid: (p, q),
            };
            first = false;
        }
    }
    Ok(best)
}

/// Scores every column of the dataset against the class label and returns
/// `(column, score)` pairs sorted by descending MIC, ties by ascending
/// column position. Columns are scored in parallel.
pub fn rank_by_mic(dataset: &Dataset, cfg: &MicConfig) -> Result<Vec<(usize, MicScore)>> {
    let labels = dataset.labels();
    let n_classes = dataset.n_classes();
    let mut scored: Vec<(usize, MicScore)> = (0..dataset.n_features())
        .into_par_iter()
        .map(|c| {
            let col = dataset.column(c);
            mic_with_label(&col, labels, n_classes, cfg).map(|s| (c, s))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.1.value
            .partial_cmp(&a.1.value)
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mutual_information_hand_values() {
        let diag = vec![vec![5, 0], vec![0, 5]];
        assert!((mutual_information(&diag).unwrap() - 2.0_f64.ln()).abs() < 1e-12);

        let independent = vec![vec![2, 2], vec![2, 2]];
        assert!(mutual_information(&independent).unwrap().abs() < 1e-12);

        let single_cell = vec![vec![1, 0], vec![0, 0]];
        assert!(mutual_information(&single_cell).unwrap().abs() < 1e-12);

        let zero = vec![vec![0, 0], vec![0, 0]];
        assert!(mutual_information(&zero).is_err());
    }

    #[test]
    fn identical_vectors_score_one_at_2x2() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let v = characteristic_value(&x, &x, 2, 2, &MicConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn constant_y_scores_zero() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y = vec![3.0; 50];
        let v = characteristic_value(&x, &y, 3, 3, &MicConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn characteristic_value_never_exceeds_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(10..80);
            let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let p = rng.random_range(2..6);
            let q = rng.random_range(2..6);
            let v = characteristic_value(&x, &y, p, q, &MicConfig::default()).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn mic_of_identity_is_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let score = mic(&x, &x, &MicConfig::default()).unwrap();
        assert!(score.value >= 0.99, "got {}", score.value);
    }

    #[test]
    fn mic_of_independent_uniforms_stays_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let x: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
            let score = mic(&x, &y, &MicConfig::default()).unwrap();
            assert!(score.value < 0.3, "got {}", score.value);
        }
    }

    #[test]
    fn equal_frequency_family_is_exactly_symmetric() {
        let cfg = MicConfig {
            max_clumps_factor: 1,
            ..MicConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.random_range(20..120);
            let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let xy = mic(&x, &y, &cfg).unwrap().value;
            let yx = mic(&y, &x, &cfg).unwrap().value;
            assert_eq!(xy, yx);
        }
    }

    #[test]
    fn refined_family_is_nearly_symmetric() {
        let cfg = MicConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.random_range(40..150);
            let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let xy = mic(&x, &y, &cfg).unwrap().value;
            let yx = mic(&y, &x, &cfg).unwrap().value;
            assert!((xy - yx).abs() <= 0.05, "asymmetry {}", (xy - yx).abs());
        }
    }

    #[test]
    fn monotone_transform_invariance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x: Vec<f64> = (0..150).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v + rng.random::<f64>() * 0.3).collect();
        let transformed: Vec<f64> = x.iter().map(|&v| v.exp()).collect();

        for cfg in [
            MicConfig::default(),
            MicConfig { max_clumps_factor: 1, ..MicConfig::default() },
        ] {
            let base = mic(&x, &y, &cfg).unwrap();
            let trans = mic(&transformed, &y, &cfg).unwrap();
            assert_eq!(base.value, trans.value);
            assert_eq!(base.best_grid, trans.best_grid);
        }
    }

    #[test]
    fn label_copy_outranks_constant_column() {
        // Column 0 copies the label, column 1 is constant, column 2 is noise.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let labels: Vec<u32> = (0..60).map(|i| (i % 3 == 0) as u32).collect();
        let mut features = Vec::new();
        for &l in &labels {
            features.push(l as f64);
            features.push(0.5);
            features.push(rng.random());
        }
        let d = Dataset::from_parts(features, labels, 3, vec![0, 1, 2]).unwrap();
        let ranked = rank_by_mic(&d, &MicConfig::default()).unwrap();
        assert_eq!(ranked[0].0, 0);
        assert!(ranked[0].1.value > 0.9, "label copy scored {}", ranked[0].1.value);
        assert_eq!(ranked[2].1.value, 0.0); // the constant column ranks last
    }

    #[test]
    fn identical_columns_tie_with_lower_index_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let labels: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        let shared: Vec<f64> = (0..40).map(|_| rng.random()).collect();
        let mut features = Vec::new();
        for &v in &shared {
            features.push(rng.random()); // col 0: noise
            features.push(v); // col 1
            features.push(v); // col 2: duplicate of col 1
        }
        let d = Dataset::from_parts(features, labels, 3, vec![0, 1, 2]).unwrap();
        let ranked = rank_by_mic(&d, &MicConfig::default()).unwrap();
        let pos1 = ranked.iter().position(|&(c, _)| c == 1).unwrap();
        let pos2 = ranked.iter().position(|&(c, _)| c == 2).unwrap();
        assert_eq!(pos2, pos1 + 1, "duplicates must be adjacent, lower index first");
    }
}
