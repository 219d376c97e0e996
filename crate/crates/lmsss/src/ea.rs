//! The evolutionary engine: size-uniform initialization, voting and uniform
//! crossover, flip-bit and revival mutation, cached fitness evaluation and
//! NSGA-II-style environmental selection.
//!
//! All randomness flows through one seeded stream consumed only in the
//! sequential parts of the loop; fitness evaluation of an offspring batch is
//! pure and runs in parallel, so runs are bit-reproducible per seed.

use std::collections::HashMap;

use rand::Rng;
use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{loocv_eval, ClassifierConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::moo::{crowding_distance, hypervolume_2d, non_dominated_sort, ObjectiveVector};

/// One candidate solution: a mask plus its cached objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub mask: FeatureMask,
    pub objectives: Option<ObjectiveVector>,
    /// Monotone stamp of when the evaluation happened (0 = unevaluated).
    pub eval_id: u64,
}

impl Individual {
    pub fn unevaluated(mask: FeatureMask) -> Self {
        Individual {
            mask,
            objectives: None,
            eval_id: 0,
        }
    }

    pub fn objectives(&self) -> Result<ObjectiveVector> {
        self.objectives
            .ok_or_else(|| Error::InvalidArgument("individual has not been evaluated".into()))
    }
}

/// Crossover operator choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverOp {
    /// Agreement bits copy over; disagreements take the lower-loss parent's
    /// bit with probability `pr`.
    Voting { pr: f64 },
    /// With probability `rate` mix the parents bit-wise 50/50; otherwise the
    /// first parent passes through.
    Uniform { rate: f64 },
}

/// Per-bit flip probability for the mutation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationRate {
    /// `1 / D'` where `D'` is the width of the current search space.
    PerWidth,
    Fixed(f64),
}

/// Initial population scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Draw a subset size uniformly from `1..=D'` per individual, then set
    /// that many random bits: uniform over subset sizes, not just bits.
    SizeUniform,
    /// Each bit independently set with probability one half.
    BitUniform,
}

/// Settings for one evolutionary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EAConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub crossover: CrossoverOp,
    pub mutation_rate: MutationRate,
    /// Apply revival mutation (reinsertion of features that vanished from
    /// the whole population) during the early window.
    pub revival: bool,
    /// Fraction of the generations during which revival is active.
    pub revival_window: f64,
    pub init: InitScheme,
    pub classifier: ClassifierConfig,
    pub seed: u64,
}

impl Default for EAConfig {
    fn default() -> Self {
        EAConfig {
            pop_size: 200,
            generations: 100,
            crossover: CrossoverOp::Voting { pr: 0.7 },
            mutation_rate: MutationRate::PerWidth,
            revival: true,
            revival_window: 0.10,
            init: InitScheme::SizeUniform,
            classifier: ClassifierConfig::default(),
            seed: 0,
        }
    }
}

impl EAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 || !self.pop_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population size must be even and at least 2, got {}",
                self.pop_size
            )));
        }
        match self.crossover {
            CrossoverOp::Voting { pr } => {
                if !(pr > 0.5 && pr <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "voting crossover needs 0.5 < pr <= 1, got {pr}"
                    )));
                }
            }
            CrossoverOp::Uniform { rate } => {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(Error::InvalidConfig(format!(
                        "uniform crossover rate must be in [0,1], got {rate}"
                    )));
                }
            }
        }
        if let MutationRate::Fixed(rate) = self.mutation_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "mutation rate must be in (0,1], got {rate}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.revival_window) {
            return Err(Error::InvalidConfig(format!(
                "revival window must be in [0,1], got {}",
                self.revival_window
            )));
        }
        Ok(())
    }

    fn flip_rate(&self, width: usize) -> f64 {
        match self.mutation_rate {
            MutationRate::PerWidth => 1.0 / width as f64,
            MutationRate::Fixed(rate) => rate,
        }
    }
}

/// Draws the initial population. Deterministic per rng state.
pub fn init_population(width: usize, cfg: &EAConfig, rng: &mut ChaCha8Rng) -> Vec<Individual> {
    assert!(width >= 1);
    (0..cfg.pop_size)
        .map(|_| {
            let mask = match cfg.init {
                InitScheme::SizeUniform => {
                    let n = rng.random_range(1..=width);
                    let picked = sample(rng, width, n).into_vec();
                    FeatureMask::from_indices(width, &picked).expect("indices in range")
                }
                InitScheme::BitUniform => {
                    let mut mask = FeatureMask::zeros(width);
                    for i in 0..width {
                        if rng.random::<bool>() {
                            mask.set(i, true);
                        }
                    }
                    repair(mask, rng)
                }
            };
            Individual::unevaluated(mask)
        })
        .collect()
}

/// Sets one uniformly random bit if the mask came out empty.
fn repair(mut mask: FeatureMask, rng: &mut ChaCha8Rng) -> FeatureMask {
    if mask.count_ones() == 0 {
        let i = rng.random_range(0..mask.width());
        mask.set(i, true);
    }
    mask
}

/// Voting crossover: bits both parents agree on are copied; each
/// disagreement bit takes the lower-loss parent's value with probability
/// `pr`, the other parent's otherwise. Parents must be evaluated.
pub fn voting_crossover(
    p1: &Individual,
    p2: &Individual,
    pr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FeatureMask> {
    if p1.mask.width() != p2.mask.width() {
        return Err(Error::InvalidArgument("parent mask widths differ".into()));
    }
    if !(pr > 0.5 && pr <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "voting crossover needs 0.5 < pr <= 1, got {pr}"
        )));
    }
    let a = p1.objectives()?;
    let b = p2.objectives()?;
    // The better parent leads the vote: lower loss, then fewer features,
    // then p1 keeps its role.
    let better = if (b.loss, b.feature_ratio) < (a.loss, a.feature_ratio) {
        p2
    } else {
        p1
    };
    let other = if std::ptr::eq(better, p1) { p2 } else { p1 };

    let mut child = better.mask.clone();
    for pos in better.mask.disagreement(&other.mask) {
        if rng.random::<f64>() >= pr {
            child.flip(pos); // take the other parent's bit
        }
    }
    Ok(child)
}

/// Uniform crossover of two masks: every bit comes from either parent with
/// equal probability.
pub fn uniform_crossover(a: &FeatureMask, b: &FeatureMask, rng: &mut ChaCha8Rng) -> FeatureMask {
    debug_assert_eq!(a.width(), b.width());
    let mut child = a.clone();
    for pos in a.disagreement(b) {
        if rng.random::<bool>() {
            child.flip(pos);
        }
    }
    child
}

/// Flip-bit mutation: each bit flips independently with probability `rate`;
/// an all-zero result is repaired to one random bit.
///
/// Implemented by drawing the flip count from the matching binomial and then
/// choosing that many distinct positions, which is distribution-identical to
/// per-bit coin flips but costs O(flips) instead of O(width).
pub fn flip_mutation(mask: &FeatureMask, rate: f64, rng: &mut ChaCha8Rng) -> FeatureMask {
    assert!(rate > 0.0 && rate <= 1.0, "flip rate must be in (0,1]");
    let width = mask.width();
    let binomial = Binomial::new(width as u64, rate).expect("valid rate");
    let flips = binomial.sample(rng) as usize;
    let mut out = mask.clone();
    if flips > 0 {
        for pos in sample(rng, width, flips) {
            out.flip(pos);
        }
    }
    repair(out, rng)
}

/// Revival mutation: inside the early window (`generation <
/// revival_window * generations`), every feature absent from the whole pool
/// is set in one uniformly chosen individual, invalidating that individual's
/// cached objectives. Outside the window the pool is untouched.
pub fn revival_mutation(
    pool: &mut [Individual],
    generation: usize,
    cfg: &EAConfig,
    rng: &mut ChaCha8Rng,
) {
    if pool.is_empty() {
        return;
    }
    if (generation as f64) >= cfg.revival_window * cfg.generations as f64 {
        return;
    }
    let width = pool[0].mask.width();
    let mut coverage = FeatureMask::zeros(width);
    for ind in pool.iter() {
        ind.mask.or_into(&mut coverage);
    }
    for feature in 0..width {
        if !coverage.get(feature) {
            let who = rng.random_range(0..pool.len());
            pool[who].mask.set(feature, true);
            pool[who].objectives = None;
            pool[who].eval_id = 0;
        }
    }
}

/// Scores a mask on the training set: feature ratio plus leave-one-out loss.
pub fn evaluate_mask(
    mask: &FeatureMask,
    train: &Dataset,
    cfg: &ClassifierConfig,
) -> Result<ObjectiveVector> {
    let eval = loocv_eval(train, mask, cfg)?;
    Ok(ObjectiveVector::new(
        mask.count_ones() as f64 / mask.width() as f64,
        eval.loss,
    ))
}

/// NSGA-II environmental selection: fill by ascending non-domination rank;
/// the rank that does not fit whole is cut by descending crowding distance,
/// ties by insertion order. The lexicographically best `(loss, ratio)`
/// individual of the pool is guaranteed to survive.
pub fn environmental_selection(
    combined: Vec<Individual>,
    pop_size: usize,
) -> Result<Vec<Individual>> {
    if combined.len() < pop_size {
        return Err(Error::InvalidArgument(format!(
            "cannot select {pop_size} from a pool of {}",
            combined.len()
        )));
    }
    let objectives: Vec<ObjectiveVector> = combined
        .iter()
        .map(|ind| ind.objectives())
        .collect::<Result<_>>()?;

    let ranks = non_dominated_sort(&objectives);
    let mut selected: Vec<usize> = Vec::with_capacity(pop_size);
    for rank in &ranks {
        if selected.len() + rank.len() <= pop_size {
            selected.extend_from_slice(rank);
            if selected.len() == pop_size {
                break;
            }
        } else {
            let points: Vec<ObjectiveVector> = rank.iter().map(|&i| objectives[i]).collect();
            let crowd = crowding_distance(&points);
            let mut order: Vec<usize> = (0..rank.len()).collect();
            order.sort_by(|&a, &b| crowd[b].partial_cmp(&crowd[a]).unwrap().then(a.cmp(&b)));
            let need = pop_size - selected.len();
            selected.extend(order[..need].iter().map(|&w| rank[w]));
            break;
        }
    }

    // Elitism: the best (loss, ratio) individual always survives.
    let elite = (0..combined.len())
        .min_by(|&a, &b| {
            let (x, y) = (objectives[a], objectives[b]);
            (x.loss, x.feature_ratio)
                .partial_cmp(&(y.loss, y.feature_ratio))
                .unwrap()
                .then(a.cmp(&b))
        })
        .expect("non-empty pool");
    if !selected.contains(&elite) {
        *selected.last_mut().expect("pop_size > 0") = elite;
    }

    let mut keep: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    Ok(selected
        .into_iter()
        .map(|i| keep[i].take().expect("indices unique"))
        .collect())
}

/// Per-generation progress record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub generation: usize,
    pub best_loss: f64,
    pub rank0_hypervolume: f64,
}

/// Result of one evolutionary run.
#[derive(Debug, Clone)]
pub struct EARun {
    /// The final population, evaluated.
    pub population: Vec<Individual>,
    /// Rank-0 individuals of the final population, deduplicated by mask.
    pub front: Vec<Individual>,
    /// One entry for the initial population plus one per generation.
    pub history: Vec<HistoryEntry>,
    /// Individuals submitted for evaluation (cache hits included).
    pub nominal_evaluations: u64,
    /// Leave-one-out evaluations actually computed (cache misses).
    pub classifier_calls: u64,
}

/// Evaluation cache for one run, keyed by exact mask. Duplicated genomes are
/// common in later generations and leave-one-out evaluation dominates the
/// runtime, so hits are worth tracking.
struct EvalCache {
    seen: HashMap<FeatureMask, ObjectiveVector>,
    nominal: u64,
    calls: u64,
    next_id: u64,
}

impl EvalCache {
    fn new() -> Self {
        EvalCache {
            seen: HashMap::new(),
            nominal: 0,
            calls: 0,
            next_id: 1,
        }
    }

    /// Evaluates every unevaluated individual, filling from the cache where
    /// possible and computing misses in parallel (pure per-mask work, so the
    /// outcome is schedule-independent).
    fn evaluate_all(
        &mut self,
        pool: &mut [Individual],
        train: &Dataset,
        cfg: &ClassifierConfig,
    ) -> Result<()> {
        let mut missing: Vec<FeatureMask> = Vec::new();
        for ind in pool.iter() {
            if ind.objectives.is_none() && !self.seen.contains_key(&ind.mask)
                && !missing.contains(&ind.mask) {
                    missing.push(ind.mask.clone());
                }
        }
        let computed: Vec<(FeatureMask, ObjectiveVector)> = missing
            .into_par_iter()
            .map(|mask| evaluate_mask(&mask, train, cfg).map(|obj| (mask, obj)))
            .collect::<Result<_>>()?;
        self.calls += computed.len() as u64;
        self.seen.extend(computed);

        for ind in pool.iter_mut() {
            if ind.objectives.is_none() {
                ind.objectives = Some(self.seen[&ind.mask]);
                ind.eval_id = self.next_id;
                self.next_id += 1;
                self.nominal += 1;
            }
        }
        Ok(())
    }
}

fn history_entry(generation: usize, pool: &[Individual]) -> HistoryEntry {
    let objectives: Vec<ObjectiveVector> =
        pool.iter().filter_map(|ind| ind.objectives).collect();
    let best_loss = objectives
        .iter()
        .map(|o| o.loss)
        .fold(f64::INFINITY, f64::min);
    let ranks = non_dominated_sort(&objectives);
    let rank0: Vec<ObjectiveVector> = ranks
        .first()
        .map(|r| r.iter().map(|&i| objectives[i]).collect())
        .unwrap_or_default();
    HistoryEntry {
        generation,
        best_loss,
        rank0_hypervolume: hypervolume_2d(&rank0, &ObjectiveVector::new(1.0, 1.0)),
    }
}

/// Ranks and crowding distances over the whole pool, for mating selection.
fn rank_and_crowd(pool: &[Individual]) -> (Vec<usize>, Vec<f64>) {
    let objectives: Vec<ObjectiveVector> = pool
        .iter()
        .map(|ind| ind.objectives.expect("pool evaluated"))
        .collect();
    let ranks = non_dominated_sort(&objectives);
    let mut rank_of = vec![0usize; pool.len()];
    let mut crowd_of = vec![0.0f64; pool.len()];
    for (r, members) in ranks.iter().enumerate() {
        let points: Vec<ObjectiveVector> = members.iter().map(|&i| objectives[i]).collect();
        let crowd = crowding_distance(&points);
        for (w, &i) in members.iter().enumerate() {
            rank_of[i] = r;
            crowd_of[i] = crowd[w];
        }
    }
    (rank_of, crowd_of)
}

/// Binary tournament on (rank, crowding distance); the first pick wins ties.
fn tournament(
    pool_len: usize,
    rank_of: &[usize],
    crowd_of: &[f64],
    rng: &mut ChaCha8Rng,
) -> usize {
    let a = rng.random_range(0..pool_len);
    let b = rng.random_range(0..pool_len);
    if rank_of[b] < rank_of[a] || (rank_of[b] == rank_of[a] && crowd_of[b] > crowd_of[a]) {
        b
    } else {
        a
    }
}

/// Runs the evolutionary loop on the training set and returns the final
/// population, its deduplicated rank-0 front and per-generation history.
pub fn run_ea(train: &Dataset, cfg: &EAConfig) -> Result<EARun> {
    cfg.validate()?;
    let width = train.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache = EvalCache::new();

    let mut population = init_population(width, cfg, &mut rng);
    cache.evaluate_all(&mut population, train, &cfg.classifier)?;
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(history_entry(0, &population));

    for generation in 0..cfg.generations {
        let (rank_of, crowd_of) = rank_and_crowd(&population);
        let mut offspring = Vec::with_capacity(cfg.pop_size);
        for _ in 0..cfg.pop_size {
            let a = tournament(population.len(), &rank_of, &crowd_of, &mut rng);
            let b = tournament(population.len(), &rank_of, &crowd_of, &mut rng);
            let child = match cfg.crossover {
                CrossoverOp::Voting { pr } => {
                    voting_crossover(&population[a], &population[b], pr, &mut rng)?
                }
                CrossoverOp::Uniform { rate } => {
                    if rng.random::<f64>() < rate {
                        uniform_crossover(&population[a].mask, &population[b].mask, &mut rng)
                    } else {
                        population[a].mask.clone()
                    }
                }
            };
            let mutated = flip_mutation(&child, cfg.flip_rate(width), &mut rng);
            offspring.push(Individual::unevaluated(mutated));
        }
        if cfg.revival {
            revival_mutation(&mut offspring, generation, cfg, &mut rng);
        }
        cache.evaluate_all(&mut offspring, train, &cfg.classifier)?;

        let mut combined = population;
        combined.append(&mut offspring);
        population = environmental_selection(combined, cfg.pop_size)?;
        debug_assert_eq!(population.len(), cfg.pop_size);
        history.push(history_entry(generation + 1, &population));
    }

    let front = dedup_rank0(&population);
    Ok(EARun {
        population,
        front,
        history,
        nominal_evaluations: cache.nominal,
        classifier_calls: cache.calls,
    })
}

/// Rank-0 members of the pool, deduplicated by mask, insertion order kept.
fn dedup_rank0(pool: &[Individual]) -> Vec<Individual> {
    let objectives: Vec<ObjectiveVector> = pool
        .iter()
        .map(|ind| ind.objectives.expect("pool evaluated"))
        .collect();
    let ranks = non_dominated_sort(&objectives);
    let mut out: Vec<Individual> = Vec::new();
    if let Some(rank0) = ranks.first() {
        for &i in rank0 {
            if !out.iter().any(|kept| kept.mask == pool[i].mask) {
                out.push(pool[i].clone());
            }
        }
    }
    out
}
