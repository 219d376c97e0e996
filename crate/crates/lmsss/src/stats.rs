//! Cross-run statistics: two-sided Wilcoxon rank-sum tests, mean/std
//! aggregation with significance marks against a reference algorithm, and
//! win/tie/loss tallies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{igd, merge_reference_front, ObjectiveVector};
use crate::pipeline::{RunReport, Variant};

/// Metrics a result table can aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Hypervolume; higher is better.
    Hv,
    /// Inverted generational distance; lower is better.
    Igd,
    /// Minimum classification error; lower is better.
    Mce,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Hv, Metric::Igd, Metric::Mce];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Hv => "hv",
            Metric::Igd => "igd",
            Metric::Mce => "mce",
        }
    }

    fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Hv)
    }
}

/// Significance of one variant against the reference on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    /// This variant is significantly better than the reference.
    Better,
    /// This variant is significantly worse than the reference.
    Worse,
    NoDifference,
}

/// One table cell: aggregate statistics of a variant on a dataset, with the
/// significance mark against the reference (`None` on the reference column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub variant: Variant,
    pub mean: f64,
    pub std: f64,
    pub mark: Option<Mark>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset: String,
    pub cells: Vec<ComparisonCell>,
}

/// Win/tie/loss counts of the reference against one variant, over datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub variant: Variant,
    pub reference_wins: usize,
    pub ties: usize,
    pub reference_losses: usize,
}

/// A result table for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub metric: Metric,
    pub reference: Variant,
    pub alpha: f64,
    pub rows: Vec<TableRow>,
    pub summary: Vec<SummaryCell>,
}

/// Two-sided Mann-Whitney/Wilcoxon rank-sum p-value.
///
/// Small samples (both sides at most 10) are scored by exact enumeration of
/// the permutation distribution; larger samples use the normal approximation
/// with tie and continuity corrections. Requires at least 5 values per side.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    if a.len() <= 10 && b.len() <= 10 {
        rank_sum_p_exact(a, b)
    } else {
        rank_sum_p_normal(a, b)
    }
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 5 || b.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "rank-sum test needs at least 5 samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample value".into()));
    }
    Ok(())
}

/// Tie-averaged ranks of the pooled samples, returned in pool order
/// (`a` first, then `b`).
fn pooled_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).unwrap());
    let mut ranks = vec![0.0; pooled.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let average = (start + end + 1) as f64 / 2.0; // ranks are 1-based
        for &i in &order[start..end] {
            ranks[i] = average;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Normal-approximation p-value with tie and continuity corrections.
pub fn rank_sum_p_normal(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (ranks, tie_sizes) = pooled_ranks(a, b);
    let n = a.len() as f64;
    let m = b.len() as f64;
    let total = n + m;

    let r1: f64 = ranks[..a.len()].iter().sum();
    let u1 = r1 - n * (n + 1.0) / 2.0;
    let mean = n * m / 2.0;

    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if variance <= 0.0 {
        return Ok(1.0); // every pooled value tied
    }
    let z = ((u1 - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    Ok((2.0 * normal_sf(z)).clamp(0.0, 1.0))
}

/// Exact two-sided p-value by enumerating every assignment of pooled ranks.
/// Bounded to 22 pooled samples.
pub fn rank_sum_p_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let total = a.len() + b.len();
    if total > 22 {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration is limited to 22 pooled samples, got {total}"
        )));
    }
    let (ranks, _) = pooled_ranks(a, b);
    let n = a.len();
    let observed: f64 = ranks[..n].iter().sum();
    let mean = n as f64 * (total as f64 + 1.0) / 2.0;
    let threshold = (observed - mean).abs() - 1e-9;

    let mut extreme = 0u64;
    let mut count = 0u64;
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        let sum: f64 = combo.iter().map(|&i| ranks[i]).sum();
        if (sum - mean).abs() >= threshold {
            extreme += 1;
        }
        count += 1;
        // Next lexicographic combination of n out of total.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(extreme as f64 / count as f64);
            }
            k -= 1;
            if combo[k] != k + total - n {
                combo[k] += 1;
                for j in k + 1..n {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Complementary error function (Chebyshev fit; fractional error below
/// 1.2e-7 over the whole range).
fn erfcc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277))))))));
    let ans = t * poly.exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Standard normal survival function P(Z > z).
fn normal_sf(z: f64) -> f64 {
    0.5 * erfcc(z / std::f64::consts::SQRT_2)
}

/// Per-report metric values, IGD computed lazily against the per-dataset
/// reference front merged from every variant's every run.
fn metric_values(reports: &[RunReport], metric: Metric) -> Result<Vec<f64>> {
    match metric {
        Metric::Hv => Ok(reports.iter().map(|r| r.hv).collect()),
        Metric::Mce => Ok(reports.iter().map(|r| r.mce).collect()),
        Metric::Igd => {
            let igd_by_position = igd_values(reports)?;
            Ok(igd_by_position)
        }
    }
}

/// IGD of every report against its dataset's merged reference front.
fn igd_values(reports: &[RunReport]) -> Result<Vec<f64>> {
    let mut fronts_by_dataset: HashMap<&str, Vec<Vec<ObjectiveVector>>> = HashMap::new();
    for report in reports {
        fronts_by_dataset
            .entry(report.dataset.as_str())
            .or_default()
            .push(report.test_front.iter().map(|e| e.objectives).collect());
    }
    let mut reference_by_dataset: HashMap<&str, Vec<ObjectiveVector>> = HashMap::new();
    for (dataset, fronts) in &fronts_by_dataset {
        let merged = merge_reference_front(fronts)?;
        reference_by_dataset.insert(dataset, merged.points().to_vec());
    }
    reports
        .iter()
        .map(|report| {
            let reference = &reference_by_dataset[report.dataset.as_str()];
            let points: Vec<ObjectiveVector> =
                report.test_front.iter().map(|e| e.objectives).collect();
            igd(&points, reference)
        })
        .collect()
}

/// Backfills the pending `igd` field of every report, using the merged
/// per-dataset reference front over all reports given.
pub fn compute_igd(reports: &mut [RunReport]) -> Result<()> {
    let values = igd_values(reports)?;
    for (report, value) in reports.iter_mut().zip(values) {
        report.igd = Some(value);
    }
    Ok(())
}

/// Builds the mean/std/mark table for one metric over grouped run reports.
///
/// Requires at least two variants and the same run count for every variant
/// of a dataset. Marks compare each variant's run values against the
/// reference variant's at the given significance level.
pub fn tabulate(
    reports: &[RunReport],
    metric: Metric,
    reference: Variant,
    alpha: f64,
) -> Result<Table> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to tabulate".into()));
    }
    let values = metric_values(reports, metric)?;

    // Dataset order: first appearance. Variant order: the ablation ladder.
    let mut datasets: Vec<&str> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let variants: Vec<Variant> = Variant::ALL
        .into_iter()
        .filter(|v| reports.iter().any(|r| r.variant == *v))
        .collect();
    if variants.len() < 2 {
        return Err(Error::InvalidArgument(
            "tabulation needs at least two variants".into(),
        ));
    }
    if !variants.contains(&reference) {
        return Err(Error::InvalidArgument(format!(
            "reference variant {reference} has no runs"
        )));
    }

    let mut grouped: HashMap<(&str, Variant), Vec<f64>> = HashMap::new();
    for (report, value) in reports.iter().zip(&values) {
        grouped
            .entry((report.dataset.as_str(), report.variant))
            .or_default()
            .push(*value);
    }

    let mut rows = Vec::with_capacity(datasets.len());
    let mut tallies: HashMap<Variant, (usize, usize, usize)> = HashMap::new();
    for dataset in &datasets {
        let reference_values = grouped
            .get(&(*dataset, reference))
            .ok_or_else(|| {
                Error::InvalidArgument(format!("no {reference} runs for dataset {dataset}"))
            })?
            .clone();
        let expected_runs = reference_values.len();

        let mut cells = Vec::with_capacity(variants.len());
        for &variant in &variants {
            let values = grouped.get(&(*dataset, variant)).ok_or_else(|| {
                Error::InvalidArgument(format!("no {variant} runs for dataset {dataset}"))
            })?;
            if values.len() != expected_runs {
                return Err(Error::InvalidArgument(format!(
                    "unbalanced run counts on {dataset}: {variant} has {} runs, {reference} has {expected_runs}",
                    values.len()
                )));
            }
            let mark = if variant == reference {
                None
            } else {
                Some(compare(values, &reference_values, metric, alpha)?)
            };
            if let Some(mark) = mark {
                let tally = tallies.entry(variant).or_insert((0, 0, 0));
                match mark {
                    Mark::Worse => tally.0 += 1,      // reference wins
                    Mark::NoDifference => tally.1 += 1,
                    Mark::Better => tally.2 += 1,     // reference loses
                }
            }
            cells.push(ComparisonCell {
                variant,
                mean: mean(values),
                std: sample_std(values),
                mark,
            });
        }
        rows.push(TableRow {
            dataset: dataset.to_string(),
            cells,
        });
    }

    let summary = variants
        .iter()
        .filter(|&&v| v != reference)
        .map(|&variant| {
            let (wins, ties, losses) = tallies.get(&variant).copied().unwrap_or((0, 0, 0));
            SummaryCell {
                variant,
                reference_wins: wins,
                ties,
                reference_losses: losses,
            }
        })
        .collect();

    Ok(Table {
        metric,
        reference,
        alpha,
        rows,
        summary,
    })
}

/// Significance mark of `variant_values` against `reference_values`.
fn compare(
    variant_values: &[f64],
    reference_values: &[f64],
    metric: Metric,
    alpha: f64,
) -> Result<Mark> {
    let p = wilcoxon_rank_sum(variant_values, reference_values)?;
    if p >= alpha {
        return Ok(Mark::NoDifference);
    }
    // Direction from the mean pooled rank, the quantity the test actually
    // compares.
    let (ranks, _) = pooled_ranks(variant_values, reference_values);
    let variant_mean_rank =
        ranks[..variant_values.len()].iter().sum::<f64>() / variant_values.len() as f64;
    let reference_mean_rank =
        ranks[variant_values.len()..].iter().sum::<f64>() / reference_values.len() as f64;
    let variant_larger = variant_mean_rank > reference_mean_rank;
    let better = variant_larger == metric.higher_is_better();
    Ok(if better { Mark::Better } else { Mark::Worse })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::BudgetLedger;

    #[test]
    fn identical_samples_are_not_significant() {
        let a = vec![0.4, 0.5, 0.6, 0.7, 0.8];
        assert_eq!(wilcoxon_rank_sum(&a, &a).unwrap(), 1.0);

        let long: Vec<f64> = (0..31).map(|i| i as f64 * 0.01).collect();
        let p = wilcoxon_rank_sum(&long, &long).unwrap();
        assert!(p >= 0.95, "p = {p}");
    }

    #[test]
    fn disjoint_supports_are_highly_significant() {
        let a: Vec<f64> = (0..31).map(|i| 0.001 * i as f64).collect();
        let b: Vec<f64> = (0..31).map(|i| 1.0 + 0.001 * i as f64).collect();
        let p = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn canonical_five_vs_five_matches_exact_enumeration() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let b = vec![6.0, 7.0, 8.0, 9.0, 10.0];
        let p = wilcoxon_rank_sum(&a, &b).unwrap();
        // Two tail assignments out of C(10,5) = 252.
        assert!((p - 2.0 / 252.0).abs() < 1e-12, "p = {p}");
        assert_eq!(
            wilcoxon_rank_sum(&a, &b).unwrap(),
            wilcoxon_rank_sum(&b, &a).unwrap()
        );
    }

    #[test]
    fn too_few_samples_are_rejected() {
        let short = vec![1.0, 2.0, 3.0];
        let ok = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(wilcoxon_rank_sum(&short, &ok).is_err());
        assert!(wilcoxon_rank_sum(&ok, &short).is_err());
    }

    #[test]
    fn p_value_decreases_with_separation() {
        let base: Vec<f64> = (0..31).map(|i| (i as f64 * 0.37) % 1.0).collect();
        let mut last = 1.1;
        for shift in [0.0, 0.2, 0.5, 1.0, 2.0] {
            let shifted: Vec<f64> = base.iter().map(|v| v + shift).collect();
            let p = wilcoxon_rank_sum(&base, &shifted).unwrap();
            assert!(p <= last + 1e-12, "shift {shift}: p went up to {p}");
            last = p;
        }
    }

    #[test]
    fn normal_approximation_tracks_exact_midrange() {
        // Overlapping samples where the p-value is far from the tails.
        let a = vec![0.1, 0.4, 0.45, 0.6, 0.9];
        let b = vec![0.2, 0.35, 0.5, 0.7, 0.95];
        let exact = rank_sum_p_exact(&a, &b).unwrap();
        let approx = rank_sum_p_normal(&a, &b).unwrap();
        assert!(
            (approx - exact).abs() / exact < 0.10,
            "exact {exact} vs approx {approx}"
        );
    }

    fn report(dataset: &str, variant: Variant, run_index: usize, hv: f64, mce: f64) -> RunReport {
        RunReport {
            dataset: dataset.to_string(),
            variant,
            run_index,
            seed: run_index as u64,
            split_hash: 0,
            shrunk_space: None,
            train_front: Vec::new(),
            test_front: vec![crate::pipeline::FrontEntry {
                features: vec![0],
                objectives: ObjectiveVector::new(1.0 - hv, 1.0 - hv),
            }],
            hv,
            igd: None,
            mce,
            wall_time_seconds: 0.0,
            budget: BudgetLedger {
                pop_size: 0,
                lightweight_runs: 0,
                lightweight_generations: 0,
                main_generations: 0,
                nominal_evaluations: 0,
                classifier_evaluations: 0,
            },
        }
    }

    #[test]
    fn identical_variants_tie_everywhere() {
        let mut reports = Vec::new();
        for i in 0..8 {
            let hv = 0.5 + 0.01 * i as f64;
            reports.push(report("d1", Variant::Lmsss, i, hv, 0.2));
            reports.push(report("d1", Variant::Nsga2, i, hv, 0.2));
        }
        let table = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_eq!(row.cells.len(), 2);
        for cell in &row.cells {
            match cell.variant {
                Variant::Lmsss => assert_eq!(cell.mark, None),
                _ => assert_eq!(cell.mark, Some(Mark::NoDifference)),
            }
        }
        assert_eq!(table.summary.len(), 1);
        assert_eq!(table.summary[0].reference_wins, 0);
        assert_eq!(table.summary[0].ties, 1);
        assert_eq!(table.summary[0].reference_losses, 0);
    }

    #[test]
    fn dominated_variant_is_marked_worse() {
        let mut reports = Vec::new();
        for i in 0..31 {
            reports.push(report("d1", Variant::Lmsss, i, 0.9 + 0.001 * i as f64, 0.1));
            reports.push(report("d1", Variant::Nsga2, i, 0.5 + 0.001 * i as f64, 0.4));
        }
        let table = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap();
        let nsga_cell = table.rows[0]
            .cells
            .iter()
            .find(|c| c.variant == Variant::Nsga2)
            .unwrap();
        assert_eq!(nsga_cell.mark, Some(Mark::Worse));
        assert_eq!(table.summary[0].reference_wins, 1);

        // On MCE lower is better, so the same variant is worse there too.
        let table = tabulate(&reports, Metric::Mce, Variant::Lmsss, 0.05).unwrap();
        let nsga_cell = table.rows[0]
            .cells
            .iter()
            .find(|c| c.variant == Variant::Nsga2)
            .unwrap();
        assert_eq!(nsga_cell.mark, Some(Mark::Worse));
    }

    #[test]
    fn unbalanced_run_counts_are_rejected() {
        let mut reports = Vec::new();
        for i in 0..6 {
            reports.push(report("d1", Variant::Lmsss, i, 0.9, 0.1));
        }
        for i in 0..5 {
            reports.push(report("d1", Variant::Nsga2, i, 0.5, 0.4));
        }
        let err = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap_err();
        assert!(err.to_string().contains("unbalanced"), "{err}");
    }

    #[test]
    fn igd_uses_merged_reference_front() {
        // Reference variant covers (0.1, 0.1); the other sits farther away.
        let mut reports = Vec::new();
        for i in 0..5 {
            let mut good = report("d1", Variant::Lmsss, i, 0.9, 0.1);
            good.test_front[0].objectives = ObjectiveVector::new(0.1, 0.1);
            let mut bad = report("d1", Variant::Nsga2, i, 0.5, 0.4);
            bad.test_front[0].objectives = ObjectiveVector::new(0.4, 0.4);
            reports.push(good);
            reports.push(bad);
        }
        compute_igd(&mut reports).unwrap();
        for r in &reports {
            let igd = r.igd.unwrap();
            match r.variant {
                Variant::Lmsss => assert_eq!(igd, 0.0),
                // Reference front is {(0.1,0.1)}; distance from (0.4,0.4).
                _ => assert!((igd - (0.18f64).sqrt()).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn marks_are_invariant_to_run_ordering() {
        let mut reports = Vec::new();
        for i in 0..9 {
            reports.push(report("d1", Variant::Lmsss, i, 0.8 + 0.01 * i as f64, 0.1));
            reports.push(report("d1", Variant::Nsga2, i, 0.5 + 0.02 * i as f64, 0.3));
        }
        let base = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap();
        reports.reverse();
        let reversed = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap();
        for (a, b) in base.rows[0].cells.iter().zip(&reversed.rows[0].cells) {
            assert_eq!(a.mark, b.mark);
            assert_eq!(a.mean, b.mean);
        }
        assert_eq!(base.summary, reversed.summary);
    }

    #[test]
    fn tabulate_shape_one_dataset_four_variants() {
        let mut reports = Vec::new();
        for i in 0..31 {
            for (k, v) in Variant::ALL.into_iter().enumerate() {
                reports.push(report(
                    "d1",
                    v,
                    i,
                    0.5 + 0.1 * k as f64 + 0.001 * i as f64,
                    0.2,
                ));
            }
        }
        let table = tabulate(&reports, Metric::Hv, Variant::Lmsss, 0.05).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].cells.len(), 4);
        let unmarked = table.rows[0]
            .cells
            .iter()
            .filter(|c| c.mark.is_none())
            .count();
        assert_eq!(unmarked, 1);
        assert_eq!(table.summary.len(), 3);
    }
}
