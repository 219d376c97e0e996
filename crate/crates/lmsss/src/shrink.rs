//! Phase-1 search-space shrinking: MIC filter, lightweight evolutionary
//! frequency pass, and non-dominated feature ranking over the two criteria.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::ea::{run_ea, EAConfig, Individual};
use crate::error::{Error, Result};
use crate::mic::{rank_by_mic, MicConfig};
use crate::moo::{crowding_distance, non_dominated_sort, ObjectiveVector};
use crate::seed;

/// Which individuals the lightweight runs pool for frequency counting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    /// All individuals of every run's final population (duplicates kept, so
    /// the pool size is exactly runs x pop_size).
    #[default]
    FinalPopulations,
    /// Each run's deduplicated rank-0 front.
    ParetoFronts,
}

/// Shrinking-phase settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkConfig {
    /// How many top-MIC features pass the filter (clamped to the width).
    pub n_mic: usize,
    /// Size of the shrunk space (clamped to the filtered width).
    pub n_nds: usize,
    /// Number of independent lightweight runs.
    pub lightweight_runs: usize,
    /// Generations per lightweight run.
    pub lightweight_generations: usize,
    /// Fraction of the pooled solutions, best classification loss first,
    /// that enter the frequency count.
    pub top_fraction: f64,
    pub pool: PoolSource,
    /// Operators, population size, classifier and seed for the lightweight
    /// runs; the generation count is overridden per run.
    pub ea: EAConfig,
    pub mic: MicConfig,
}

impl Default for ShrinkConfig {
    fn default() -> Self {
        ShrinkConfig {
            n_mic: 1000,
            n_nds: 200,
            lightweight_runs: 5,
            lightweight_generations: 10,
            top_fraction: 0.5,
            pool: PoolSource::default(),
            ea: EAConfig::default(),
            mic: MicConfig::default(),
        }
    }
}

impl ShrinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nds > self.n_mic {
            return Err(Error::InvalidConfig(format!(
                "n_nds ({}) must not exceed n_mic ({})",
                self.n_nds, self.n_mic
            )));
        }
        if self.lightweight_runs == 0 || self.lightweight_generations == 0 {
            return Err(Error::InvalidConfig(
                "lightweight runs and generations must be at least 1".into(),
            ));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "top fraction must be in (0,1], got {}",
                self.top_fraction
            )));
        }
        self.ea.validate()
    }
}

/// Evaluation counts accumulated by the lightweight runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTally {
    /// Individuals submitted for evaluation, initial populations included.
    pub nominal: u64,
    /// Leave-one-out evaluations actually computed (cache misses).
    pub classifier_calls: u64,
}

/// One feature of the MIC-filtered set with its two ranking criteria, for
/// audit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredFeature {
    /// Original column id.
    pub column: usize,
    pub mic: f64,
    /// Frequency scaled to `[0,1]` by the maximum count.
    pub freq: f64,
    pub nds_rank: usize,
    pub selected: bool,
}

/// The shrunk search space with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkResult {
    /// Original column ids of the shrunk space, in selection order.
    pub selected: Vec<usize>,
    /// MIC score per selected feature.
    pub mic_scores: Vec<f64>,
    /// Scaled frequency per selected feature, in `[0,1]`.
    pub freq_scores: Vec<f64>,
    /// Non-domination rank over (MIC, frequency) per selected feature.
    pub provenance: Vec<usize>,
    /// Every filtered feature with scores and rank, audit-friendly.
    pub filtered: Vec<FilteredFeature>,
    /// Budget spent by the lightweight runs.
    pub evaluations: EvalTally,
}

/// Projects the training set onto the `n_mic` highest-MIC columns (ties by
/// ascending column position) and returns the projected view together with
/// the aligned scores.
pub fn mic_filter(train: &Dataset, cfg: &ShrinkConfig) -> Result<(Dataset, Vec<f64>)> {
    let ranked = rank_by_mic(train, &cfg.mic)?;
    let take = cfg.n_mic.min(ranked.len());
    let columns: Vec<usize> = ranked[..take].iter().map(|r| r.0).collect();
    let scores: Vec<f64> = ranked[..take].iter().map(|r| r.1.value).collect();
    let projected = train.project_columns(&columns)?;
    Ok((projected, scores))
}

/// Runs the lightweight evolutionary process `lightweight_runs` times on the
/// filtered dataset and counts, per column, how many of the pooled top
/// solutions select it. Also returns the evaluation tally of the runs.
pub fn frequency_pass(filtered: &Dataset, cfg: &ShrinkConfig) -> Result<(Vec<u32>, EvalTally)> {
    let mut pool: Vec<Individual> = Vec::new();
    let mut tally = EvalTally::default();
    for run_index in 0..cfg.lightweight_runs {
        let run_cfg = EAConfig {
            generations: cfg.lightweight_generations,
            seed: seed::mix(seed::mix_str(cfg.ea.seed, "lightweight"), run_index as u64),
            ..cfg.ea.clone()
        };
        let run = run_ea(filtered, &run_cfg)?;
        tally.nominal += run.nominal_evaluations;
        tally.classifier_calls += run.classifier_calls;
        match cfg.pool {
            PoolSource::FinalPopulations => pool.extend(run.population),
            PoolSource::ParetoFronts => pool.extend(run.front),
        }
    }
    let counts = count_top_frequencies(&pool, cfg.top_fraction, filtered.n_features())?;
    Ok((counts, tally))
}

/// Frequency counting over an explicit pool: solutions are ordered by
/// ascending loss (ties by ascending feature ratio, then pool order), the
/// top fraction is kept, and each feature's indicator sum over the kept
/// masks is its count.
pub fn count_top_frequencies(
    pool: &[Individual],
    top_fraction: f64,
    width: usize,
) -> Result<Vec<u32>> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty solution pool".into()));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let keys: Vec<(f64, f64)> = pool
        .iter()
        .map(|ind| ind.objectives().map(|o| (o.loss, o.feature_ratio)))
        .collect::<Result<_>>()?;
    order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap().then(a.cmp(&b)));

    let keep = ((top_fraction * pool.len() as f64).floor() as usize).max(1);
    let mut counts = vec![0u32; width];
    for &i in &order[..keep] {
        for bit in pool[i].mask.iter_ones() {
            counts[bit] += 1;
        }
    }
    Ok(counts)
}

/// Ranks the filtered features by non-dominated sorting over (MIC, scaled
/// frequency), both maximized, and fills the shrunk space rank by rank; a
/// rank that does not fit whole is cut by descending crowding distance,
/// ties by ascending column position.
pub fn nds_feature_ranking(
    column_ids: &[usize],
    mic_scores: &[f64],
    freq_counts: &[u32],
    n_nds: usize,
) -> Result<ShrinkResult> {
    let n = column_ids.len();
    if mic_scores.len() != n || freq_counts.len() != n {
        return Err(Error::InvalidArgument(
            "misaligned score vectors in feature ranking".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no features to rank".into()));
    }
    let max_count = freq_counts.iter().copied().max().unwrap_or(0);
    let freq: Vec<f64> = if max_count > 0 {
        freq_counts.iter().map(|&c| c as f64 / max_count as f64).collect()
    } else {
        vec![0.0; n]
    };

    // Maximization over both criteria, expressed through the minimizing
    // sorter by negating the coordinates.
    let points: Vec<ObjectiveVector> = mic_scores
        .iter()
        .zip(&freq)
        .map(|(&m, &f)| ObjectiveVector::new(-m, -f))
        .collect();
    let ranks = non_dominated_sort(&points);

    let mut rank_of = vec![0usize; n];
    for (r, members) in ranks.iter().enumerate() {
        for &i in members {
            rank_of[i] = r;
        }
    }

    let want = n_nds.min(n);
    let mut selected_positions: Vec<usize> = Vec::with_capacity(want);
    for members in &ranks {
        if selected_positions.len() + members.len() <= want {
            selected_positions.extend_from_slice(members);
            if selected_positions.len() == want {
                break;
            }
        } else {
            let rank_points: Vec<ObjectiveVector> =
                members.iter().map(|&i| points[i]).collect();
            let crowd = crowding_distance(&rank_points);
            let mut order: Vec<usize> = (0..members.len()).collect();
            order.sort_by(|&a, &b| {
                crowd[b]
                    .partial_cmp(&crowd[a])
                    .unwrap()
                    .then(members[a].cmp(&members[b]))
            });
            let need = want - selected_positions.len();
            selected_positions.extend(order[..need].iter().map(|&w| members[w]));
            break;
        }
    }

    let selected_set: std::collections::HashSet<usize> =
        selected_positions.iter().copied().collect();
    let filtered = (0..n)
        .map(|i| FilteredFeature {
            column: column_ids[i],
            mic: mic_scores[i],
            freq: freq[i],
            nds_rank: rank_of[i],
            selected: selected_set.contains(&i),
        })
        .collect();

    Ok(ShrinkResult {
        selected: selected_positions.iter().map(|&i| column_ids[i]).collect(),
        mic_scores: selected_positions.iter().map(|&i| mic_scores[i]).collect(),
        freq_scores: selected_positions.iter().map(|&i| freq[i]).collect(),
        provenance: selected_positions.iter().map(|&i| rank_of[i]).collect(),
        filtered,
        evaluations: EvalTally::default(),
    })
}

/// The whole phase-1 pipeline: MIC filter, lightweight frequency pass, NDS
/// feature ranking. Selected indices refer to the original dataset's columns.
pub fn shrink(train: &Dataset, cfg: &ShrinkConfig) -> Result<ShrinkResult> {
    cfg.validate()?;
    let (filtered, mic_scores) = mic_filter(train, cfg)?;
    let (freq, tally) = frequency_pass(&filtered, cfg)?;
    let mut result = nds_feature_ranking(filtered.column_ids(), &mic_scores, &freq, cfg.n_nds)?;
    result.evaluations = tally;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use crate::mask::FeatureMask;

    fn tiny_ea(seed: u64) -> EAConfig {
        EAConfig {
            pop_size: 16,
            seed,
            ..EAConfig::default()
        }
    }

    fn tiny_cfg(seed: u64) -> ShrinkConfig {
        ShrinkConfig {
            n_mic: 20,
            n_nds: 8,
            lightweight_runs: 2,
            lightweight_generations: 3,
            ea: tiny_ea(seed),
            ..ShrinkConfig::default()
        }
    }

    #[test]
    fn mic_filter_clamps_to_width() {
        let (d, _) = generate_synthetic(50, 12, 3, 1).unwrap();
        let cfg = ShrinkConfig {
            n_mic: 1000,
            ..tiny_cfg(1)
        };
        let (filtered, scores) = mic_filter(&d, &cfg).unwrap();
        assert_eq!(filtered.n_features(), 12);
        assert_eq!(scores.len(), 12);
        // Scores arrive in descending order.
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mic_filter_keeps_label_copy() {
        let labels: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        let mut features = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            features.push((i as f64 * 0.37) % 1.0);
            features.push(l as f64);
            features.push((i as f64 * 0.61) % 1.0);
        }
        let d = Dataset::from_parts(features, labels, 3, vec![0, 1, 2]).unwrap();
        let cfg = ShrinkConfig {
            n_mic: 1,
            n_nds: 1,
            ..tiny_cfg(0)
        };
        let (filtered, _) = mic_filter(&d, &cfg).unwrap();
        assert_eq!(filtered.column_ids(), &[1]);
    }

    fn evaluated(width: usize, bits: &[usize], loss: f64) -> Individual {
        let mask = FeatureMask::from_indices(width, bits).unwrap();
        let ratio = mask.count_ones() as f64 / width as f64;
        Individual {
            mask,
            objectives: Some(ObjectiveVector::new(ratio, loss)),
            eval_id: 1,
        }
    }

    #[test]
    fn frequency_counts_match_hand_enumeration() {
        // Four known masks; the top half by loss is {mask0, mask2}.
        let pool = vec![
            evaluated(4, &[0, 1], 0.1),
            evaluated(4, &[1, 2], 0.5),
            evaluated(4, &[0, 3], 0.2),
            evaluated(4, &[2], 0.9),
        ];
        let counts = count_top_frequencies(&pool, 0.5, 4).unwrap();
        assert_eq!(counts, vec![2, 1, 0, 1]);

        // A feature selected by every kept individual counts the pool size;
        // an absent feature counts zero.
        let all = count_top_frequencies(&pool, 1.0, 4).unwrap();
        assert_eq!(all[1], 2);
        let none = count_top_frequencies(&pool, 0.25, 4).unwrap();
        assert_eq!(none, vec![1, 1, 0, 0]);
    }

    #[test]
    fn frequency_tie_breaks_by_feature_ratio() {
        let pool = vec![
            evaluated(4, &[0, 1, 2], 0.3),
            evaluated(4, &[3], 0.3),
        ];
        // Equal loss: the single-feature mask ranks first.
        let counts = count_top_frequencies(&pool, 0.5, 4).unwrap();
        assert_eq!(counts, vec![0, 0, 0, 1]);
    }

    #[test]
    fn ranking_selects_dominating_feature_first() {
        let result = nds_feature_ranking(
            &[10, 11, 12, 13],
            &[0.9, 0.5, 0.4, 0.2],
            &[8, 3, 2, 1],
            1,
        )
        .unwrap();
        assert_eq!(result.selected, vec![10]);
        assert_eq!(result.provenance, vec![0]);
        assert_eq!(result.freq_scores, vec![1.0]);
    }

    #[test]
    fn trade_off_features_share_rank_zero() {
        // One feature with max frequency but low MIC, one with high MIC but
        // low frequency: mutually non-dominated.
        let result = nds_feature_ranking(
            &[0, 1, 2],
            &[0.36, 0.60, 0.10],
            &[100, 5, 1],
            3,
        )
        .unwrap();
        let rank0: Vec<usize> = result
            .filtered
            .iter()
            .filter(|f| f.nds_rank == 0)
            .map(|f| f.column)
            .collect();
        assert_eq!(rank0, vec![0, 1]);
        assert_eq!(result.filtered[2].nds_rank, 1);
    }

    #[test]
    fn all_zero_frequencies_scale_to_zero() {
        let result = nds_feature_ranking(&[0, 1], &[0.5, 0.2], &[0, 0], 2).unwrap();
        assert_eq!(result.freq_scores, vec![0.0, 0.0]);
    }

    /// Brute-force reimplementation of the fill-by-rank selection with the
    /// same tie rules, for the oracle-equivalence check.
    fn brute_force_selection(
        mic: &[f64],
        freq_scaled: &[f64],
        n_nds: usize,
    ) -> Vec<usize> {
        let n = mic.len();
        let dominates = |a: usize, b: usize| {
            mic[a] >= mic[b]
                && freq_scaled[a] >= freq_scaled[b]
                && (mic[a] > mic[b] || freq_scaled[a] > freq_scaled[b])
        };
        let mut rank_of = vec![usize::MAX; n];
        let mut assigned = 0;
        let mut rank = 0;
        while assigned < n {
            let members: Vec<usize> = (0..n)
                .filter(|&i| rank_of[i] == usize::MAX)
                .filter(|&i| {
                    !(0..n).any(|j| rank_of[j] == usize::MAX && j != i && dominates(j, i))
                })
                .collect();
            for &i in &members {
                rank_of[i] = rank;
            }
            assigned += members.len();
            rank += 1;
        }
        let want = n_nds.min(n);
        let mut selected = Vec::new();
        for r in 0..rank {
            let members: Vec<usize> = (0..n).filter(|&i| rank_of[i] == r).collect();
            if selected.len() + members.len() <= want {
                selected.extend(members);
            } else {
                let points: Vec<ObjectiveVector> = members
                    .iter()
                    .map(|&i| ObjectiveVector::new(-mic[i], -freq_scaled[i]))
                    .collect();
                let crowd = crowding_distance(&points);
                let mut order: Vec<usize> = (0..members.len()).collect();
                order.sort_by(|&a, &b| {
                    crowd[b]
                        .partial_cmp(&crowd[a])
                        .unwrap()
                        .then(members[a].cmp(&members[b]))
                });
                selected.extend(order[..want - selected.len()].iter().map(|&w| members[w]));
                break;
            }
            if selected.len() == want {
                break;
            }
        }
        selected
    }

    #[test]
    fn ranking_matches_brute_force_oracle() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let n = 300;
        let ids: Vec<usize> = (0..n).collect();
        let mic: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let counts: Vec<u32> = (0..n).map(|_| rng.random_range(0..40)).collect();
        let result = nds_feature_ranking(&ids, &mic, &counts, 200).unwrap();

        let max = counts.iter().copied().max().unwrap() as f64;
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / max).collect();
        let expected = brute_force_selection(&mic, &freq, 200);
        assert_eq!(result.selected, expected);
    }

    #[test]
    fn shrink_clamps_and_composes() {
        let (d, _) = generate_synthetic(50, 10, 3, 5).unwrap();
        let cfg = ShrinkConfig {
            n_mic: 1000,
            n_nds: 1000,
            lightweight_runs: 1,
            lightweight_generations: 2,
            ea: tiny_ea(3),
            ..ShrinkConfig::default()
        };
        let result = shrink(&d, &cfg).unwrap();
        let mut all: Vec<usize> = result.selected.clone();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn shrink_is_deterministic_and_sound() {
        let (d, _) = generate_synthetic(60, 30, 5, 13).unwrap();
        let cfg = tiny_cfg(21);
        let a = shrink(&d, &cfg).unwrap();
        let b = shrink(&d, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.selected.len(), 8);

        // Composition soundness: everything selected passed the MIC filter.
        let (filtered, _) = mic_filter(&d, &cfg).unwrap();
        for column in &a.selected {
            assert!(filtered.column_ids().contains(column));
        }
        // Fill-by-rank order: no selected feature has a worse rank than an
        // unselected one of a strictly better rank.
        let worst_selected = a.provenance.iter().copied().max().unwrap();
        for f in &a.filtered {
            if !f.selected {
                assert!(f.nds_rank + 1 > worst_selected);
            }
        }
        // Scaled frequencies peak at 1 when anything was counted.
        if a.filtered.iter().any(|f| f.freq > 0.0) {
            let max = a.filtered.iter().map(|f| f.freq).fold(0.0f64, f64::max);
            assert_eq!(max, 1.0);
        }
    }

    #[test]
    fn default_parameters_match_published_settings() {
        let cfg = ShrinkConfig::default();
        assert_eq!(cfg.n_mic, 1000);
        assert_eq!(cfg.n_nds, 200);
        assert_eq!(cfg.lightweight_runs, 5);
        assert_eq!(cfg.lightweight_generations, 10);
        assert_eq!(cfg.top_fraction, 0.5);
        assert_eq!(cfg.ea.pop_size, 200);
    }
}
