//! Full algorithm variants over one seeded train/test split: the plain
//! NSGA-II baseline, its initialization and search-space-shrinking ablations
//! and the complete method with voting crossover and revival mutation.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{test_eval, ClassifierConfig};
use crate::dataset::{stratified_split, Dataset};
use crate::ea::{run_ea, CrossoverOp, EAConfig, InitScheme, MutationRate};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::moo::{dominates, hypervolume_2d, ObjectiveVector};
use crate::seed;
use crate::shrink::{shrink, ShrinkConfig};

/// Algorithm variants of the ablation ladder. Each one fully determines the
/// initialization scheme, the operator set and whether shrinking runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Bit-uniform initialization, uniform crossover, full feature space.
    Nsga2,
    /// Size-uniform initialization added; otherwise as `Nsga2`.
    InitNsga2,
    /// `InitNsga2` run on the shrunk search space.
    SsNsga2,
    /// `SsNsga2` plus voting crossover and revival mutation.
    Lmsss,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Nsga2,
        Variant::InitNsga2,
        Variant::SsNsga2,
        Variant::Lmsss,
    ];

    pub fn uses_shrinking(&self) -> bool {
        matches!(self, Variant::SsNsga2 | Variant::Lmsss)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Nsga2 => "nsga2",
            Variant::InitNsga2 => "init-nsga2",
            Variant::SsNsga2 => "ss-nsga2",
            Variant::Lmsss => "lmsss",
        }
    }

    /// Stable tag mixed into the main-phase seed, so variants explore
    /// independently while sharing the split and the shrinking phase.
    fn seed_tag(&self) -> u64 {
        match self {
            Variant::Nsga2 => 0,
            Variant::InitNsga2 => 1,
            Variant::SsNsga2 => 2,
            Variant::Lmsss => 3,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nsga2" | "nsga-ii" => Ok(Variant::Nsga2),
            "init-nsga2" | "init_nsga2" | "initnsga2" => Ok(Variant::InitNsga2),
            "ss-nsga2" | "ss_nsga2" | "ssnsga2" => Ok(Variant::SsNsga2),
            "lmsss" => Ok(Variant::Lmsss),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

/// Evaluation budget shared by all variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub pop_size: usize,
    pub total_generations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            pop_size: 200,
            total_generations: 100,
        }
    }
}

/// Operator rates shared across variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSettings {
    /// Voting-crossover bias toward the lower-loss parent.
    pub pr: f64,
    /// Crossover rate for the uniform-crossover baselines.
    pub uniform_rate: f64,
    /// Fraction of the main-phase generations with revival mutation.
    pub revival_window: f64,
    pub mutation_rate: MutationRate,
}

impl Default for OperatorSettings {
    fn default() -> Self {
        OperatorSettings {
            pr: 0.7,
            uniform_rate: 0.5,
            revival_window: 0.10,
            mutation_rate: MutationRate::PerWidth,
        }
    }
}

/// Everything a variant run needs besides the data and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub budget: Budget,
    pub shrink: ShrinkConfig,
    pub classifier: ClassifierConfig,
    pub operators: OperatorSettings,
    pub train_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: Budget::default(),
            shrink: ShrinkConfig::default(),
            classifier: ClassifierConfig::default(),
            operators: OperatorSettings::default(),
            train_fraction: 0.7,
        }
    }
}

/// One solution of a reported front: selected original columns and the
/// objectives in original-width terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    /// Sorted original column ids.
    pub features: Vec<usize>,
    pub objectives: ObjectiveVector,
}

/// Budget accounting for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub pop_size: usize,
    pub lightweight_runs: usize,
    pub lightweight_generations: usize,
    pub main_generations: usize,
    /// Individuals submitted for evaluation, initial populations included;
    /// caching never reduces this number.
    pub nominal_evaluations: u64,
    /// Leave-one-out evaluations actually computed.
    pub classifier_evaluations: u64,
}

/// Everything a single seeded run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub variant: Variant,
    pub run_index: usize,
    pub seed: u64,
    /// Stable hash of the train-partition row indices; equal hashes mean the
    /// identical split.
    pub split_hash: u64,
    /// Sorted original column ids of the shrunk space, for shrinking
    /// variants.
    pub shrunk_space: Option<Vec<usize>>,
    pub train_front: Vec<FrontEntry>,
    /// Train-front masks rescored on the test split and reduced to their
    /// non-dominated subset.
    pub test_front: Vec<FrontEntry>,
    /// Test-front hypervolume at reference point (1,1).
    pub hv: f64,
    /// Needs the merged cross-variant reference front; filled by the
    /// statistics stage.
    pub igd: Option<f64>,
    /// Minimum classification error rate over the test front.
    pub mce: f64,
    pub wall_time_seconds: f64,
    pub budget: BudgetLedger,
}

/// Scores masks (in original column indices) on the test split and keeps the
/// non-dominated subset. Feature ratios use the original width so fronts are
/// comparable across shrunk and full-space variants.
pub fn test_front(
    train: &Dataset,
    test: &Dataset,
    masks: &[FeatureMask],
    cfg: &ClassifierConfig,
) -> Result<Vec<(FeatureMask, ObjectiveVector)>> {
    Ok(test_front_detailed(train, test, masks, cfg)?
        .into_iter()
        .map(|(mask, objectives, _)| (mask, objectives))
        .collect())
}

fn test_front_detailed(
    train: &Dataset,
    test: &Dataset,
    masks: &[FeatureMask],
    cfg: &ClassifierConfig,
) -> Result<Vec<(FeatureMask, ObjectiveVector, f64)>> {
    if masks.is_empty() {
        return Err(Error::InvalidArgument("no masks to evaluate on the test split".into()));
    }
    let width = train.n_features();
    let scored: Vec<(FeatureMask, ObjectiveVector, f64)> = masks
        .iter()
        .map(|mask| {
            let eval = test_eval(train, test, mask, cfg)?;
            let objectives =
                ObjectiveVector::new(mask.count_ones() as f64 / width as f64, eval.loss);
            Ok((mask.clone(), objectives, eval.error_rate))
        })
        .collect::<Result<_>>()?;
    let survivors: Vec<(FeatureMask, ObjectiveVector, f64)> = scored
        .iter()
        .filter(|(_, obj, _)| !scored.iter().any(|(_, other, _)| dominates(other, obj)))
        .cloned()
        .collect();
    Ok(survivors)
}

/// Runs one variant on one seeded 70/30 split and reports fronts, metrics
/// and budget accounting. The split and the shrinking phase depend only on
/// the seed, never on the variant, so ablations stay paired.
pub fn run_variant(
    variant: Variant,
    data: &Dataset,
    dataset_name: &str,
    run_index: usize,
    run_seed: u64,
    cfg: &PipelineConfig,
) -> Result<RunReport> {
    let shrink_budget =
        cfg.shrink.lightweight_runs * cfg.shrink.lightweight_generations;
    if variant.uses_shrinking() && cfg.budget.total_generations < shrink_budget + 1 {
        return Err(Error::InvalidConfig(format!(
            "budget of {} generations cannot cover {} lightweight generations plus a main phase",
            cfg.budget.total_generations, shrink_budget
        )));
    }

    let started = Instant::now();
    let mut split = stratified_split(data, cfg.train_fraction, run_seed)?;
    split.normalize();
    let split_hash = hash_indices(&split.train_indices);
    let original_width = data.n_features();

    // Shrinking phase: seeded independently of the variant so that paired
    // shrinking variants see the identical shrunk space.
    let (ea_train, shrunk_space, light_tally, main_generations) = if variant.uses_shrinking() {
        let shrink_cfg = ShrinkConfig {
            ea: EAConfig {
                pop_size: cfg.budget.pop_size,
                generations: cfg.shrink.lightweight_generations,
                crossover: CrossoverOp::Voting { pr: cfg.operators.pr },
                mutation_rate: cfg.operators.mutation_rate,
                revival: true,
                revival_window: cfg.operators.revival_window,
                init: InitScheme::SizeUniform,
                classifier: cfg.classifier,
                seed: seed::mix_str(run_seed, "shrink"),
            },
            ..cfg.shrink.clone()
        };
        let result = shrink(&split.train, &shrink_cfg)?;
        let mut columns = result.selected.clone();
        columns.sort_unstable();
        let positions = positions_of(&split.train, &columns)?;
        let projected = split.train.project_columns(&positions)?;
        (
            projected,
            Some(columns),
            result.evaluations,
            cfg.budget.total_generations - shrink_budget,
        )
    } else {
        (
            split.train.clone(),
            None,
            crate::shrink::EvalTally::default(),
            cfg.budget.total_generations,
        )
    };

    let main_cfg = EAConfig {
        pop_size: cfg.budget.pop_size,
        generations: main_generations,
        crossover: match variant {
            Variant::Lmsss => CrossoverOp::Voting { pr: cfg.operators.pr },
            _ => CrossoverOp::Uniform { rate: cfg.operators.uniform_rate },
        },
        mutation_rate: cfg.operators.mutation_rate,
        revival: variant == Variant::Lmsss,
        revival_window: cfg.operators.revival_window,
        init: match variant {
            Variant::Nsga2 => InitScheme::BitUniform,
            _ => InitScheme::SizeUniform,
        },
        classifier: cfg.classifier,
        seed: seed::mix(seed::mix_str(run_seed, "main"), variant.seed_tag()),
    };
    let run = run_ea(&ea_train, &main_cfg)?;

    // Re-express the train front in original column indices.
    let mut train_front = Vec::with_capacity(run.front.len());
    let mut original_masks = Vec::with_capacity(run.front.len());
    for individual in &run.front {
        let features: Vec<usize> = individual
            .mask
            .iter_ones()
            .map(|bit| ea_train.column_ids()[bit])
            .collect();
        let objectives = ObjectiveVector::new(
            features.len() as f64 / original_width as f64,
            individual.objectives()?.loss,
        );
        original_masks.push(FeatureMask::from_indices(original_width, &features)?);
        train_front.push(FrontEntry {
            features,
            objectives,
        });
    }

    let test_entries =
        test_front_detailed(&split.train, &split.test, &original_masks, &cfg.classifier)?;
    let hv_points: Vec<ObjectiveVector> =
        test_entries.iter().map(|(_, obj, _)| *obj).collect();
    let hv = hypervolume_2d(&hv_points, &ObjectiveVector::new(1.0, 1.0));
    let mce = test_entries
        .iter()
        .map(|(_, _, error_rate)| *error_rate)
        .fold(f64::INFINITY, f64::min);
    let test_front = test_entries
        .into_iter()
        .map(|(mask, objectives, _)| FrontEntry {
            features: mask.to_indices(),
            objectives,
        })
        .collect();

    let (light_runs, light_gens) = if variant.uses_shrinking() {
        (cfg.shrink.lightweight_runs, cfg.shrink.lightweight_generations)
    } else {
        (0, 0)
    };
    Ok(RunReport {
        dataset: dataset_name.to_string(),
        variant,
        run_index,
        seed: run_seed,
        split_hash,
        shrunk_space: shrunk_space.clone(),
        train_front,
        test_front,
        hv,
        igd: None,
        mce,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        budget: BudgetLedger {
            pop_size: cfg.budget.pop_size,
            lightweight_runs: light_runs,
            lightweight_generations: light_gens,
            main_generations,
            nominal_evaluations: light_tally.nominal + run.nominal_evaluations,
            classifier_evaluations: light_tally.classifier_calls + run.classifier_calls,
        },
    })
}

/// Positions of the given original column ids inside a dataset view.
fn positions_of(dataset: &Dataset, columns: &[usize]) -> Result<Vec<usize>> {
    let index: HashMap<usize, usize> = dataset
        .column_ids()
        .iter()
        .enumerate()
        .map(|(pos, &id)| (id, pos))
        .collect();
    columns
        .iter()
        .map(|id| {
            index.get(id).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("column id {id} not present in dataset view"))
            })
        })
        .collect()
}

fn hash_indices(indices: &[usize]) -> u64 {
    let mut acc = seed::mix(0x73706c69, indices.len() as u64);
    for &i in indices {
        acc = seed::mix(acc, i as u64);
    }
    acc
}
