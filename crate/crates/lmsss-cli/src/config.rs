//! Experiment configuration: a single TOML file with flat key paths.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use lmsss::classifier::{ClassifierConfig, LossMetric};
use lmsss::dataset::{self, CsvOptions, Dataset, LabelColumn, NanPolicy};
use lmsss::pipeline::{Budget, OperatorSettings, PipelineConfig, Variant};
use lmsss::shrink::{PoolSource, ShrinkConfig};

/// Parameters of a generated dataset with known relevant columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub instances: usize,
    pub features: usize,
    pub informative: usize,
    pub seed: u64,
}

/// One dataset entry: either a CSV file or a synthetic specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    /// Label column by header name; `label_index` takes a 0-based position.
    /// Default: the last column.
    #[serde(default)]
    pub label_name: Option<String>,
    #[serde(default)]
    pub label_index: Option<usize>,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// "reject" (default) or "impute_mean".
    #[serde(default)]
    pub nan_policy: Option<String>,
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> String {
    ",".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub pop_size: usize,
    pub total_generations: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let b = Budget::default();
        BudgetSection {
            pop_size: b.pop_size,
            total_generations: b.total_generations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub k: usize,
    /// "one_minus_macro_f1" or "error_rate".
    pub loss_metric: String,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            k: 5,
            loss_metric: "one_minus_macro_f1".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSection {
    pub pr: f64,
    pub uniform_rate: f64,
    pub revival_window: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        let o = OperatorSettings::default();
        OperatorSection {
            pr: o.pr,
            uniform_rate: o.uniform_rate,
            revival_window: o.revival_window,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkSection {
    pub n_mic: usize,
    pub n_nds: usize,
    pub lightweight_runs: usize,
    pub lightweight_generations: usize,
    pub top_fraction: f64,
    /// "final_populations" (default) or "pareto_fronts".
    pub pool: String,
}

impl Default for ShrinkSection {
    fn default() -> Self {
        let s = ShrinkConfig::default();
        ShrinkSection {
            n_mic: s.n_mic,
            n_nds: s.n_nds,
            lightweight_runs: s.lightweight_runs,
            lightweight_generations: s.lightweight_generations,
            top_fraction: s.top_fraction,
            pool: "final_populations".into(),
        }
    }
}

/// The experiment file: datasets, variants, run count, seeds, budget and
/// algorithm parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub variants: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub operators: OperatorSection,
    #[serde(default)]
    pub shrink: ShrinkSection,
}

fn default_runs() -> usize {
    31
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("lmsss-out")
}

fn default_train_fraction() -> f64 {
    0.7
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        cfg.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    /// Structural validation; file paths are checked relative to `base`.
    pub fn validate(&self, base: &Path) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.datasets.is_empty() {
            bail!("at least one dataset is required");
        }
        if self.variants.is_empty() {
            bail!("at least one variant is required");
        }
        for v in &self.variants {
            v.parse::<Variant>()
                .with_context(|| format!("in variants list: {v:?}"))?;
        }
        for spec in &self.datasets {
            match (&spec.path, &spec.synthetic) {
                (Some(_), Some(_)) => {
                    bail!("dataset {:?} sets both path and synthetic", spec.name)
                }
                (None, None) => {
                    bail!("dataset {:?} needs either path or synthetic", spec.name)
                }
                (Some(p), None) => {
                    let resolved = resolve(base, p);
                    if !resolved.exists() {
                        bail!(
                            "dataset {:?}: file not found: {}",
                            spec.name,
                            resolved.display()
                        );
                    }
                }
                (None, Some(s)) => {
                    if s.informative == 0 || s.informative >= s.features {
                        bail!(
                            "dataset {:?}: informative must be in 1..features",
                            spec.name
                        );
                    }
                }
            }
            if spec.label_name.is_some() && spec.label_index.is_some() {
                bail!("dataset {:?}: label_name and label_index are exclusive", spec.name);
            }
            if spec.delimiter.len() != 1 {
                bail!("dataset {:?}: delimiter must be a single character", spec.name);
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must be in (0,1)");
        }
        self.pipeline_config()?; // checks the enum-valued settings
        Ok(())
    }

    pub fn parsed_variants(&self) -> Vec<Variant> {
        self.variants
            .iter()
            .map(|v| v.parse().expect("validated"))
            .collect()
    }

    pub fn loss_metric(&self) -> Result<LossMetric> {
        match self.classifier.loss_metric.as_str() {
            "one_minus_macro_f1" => Ok(LossMetric::OneMinusMacroF1),
            "error_rate" => Ok(LossMetric::ErrorRate),
            other => bail!("unknown loss metric {other:?}"),
        }
    }

    pub fn pool_source(&self) -> Result<PoolSource> {
        match self.shrink.pool.as_str() {
            "final_populations" => Ok(PoolSource::FinalPopulations),
            "pareto_fronts" => Ok(PoolSource::ParetoFronts),
            other => bail!("unknown pool source {other:?}"),
        }
    }

    /// The per-run pipeline settings this experiment file describes.
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let classifier = ClassifierConfig {
            k: self.classifier.k,
            loss_metric: self.loss_metric()?,
        };
        Ok(PipelineConfig {
            budget: Budget {
                pop_size: self.budget.pop_size,
                total_generations: self.budget.total_generations,
            },
            shrink: ShrinkConfig {
                n_mic: self.shrink.n_mic,
                n_nds: self.shrink.n_nds,
                lightweight_runs: self.shrink.lightweight_runs,
                lightweight_generations: self.shrink.lightweight_generations,
                top_fraction: self.shrink.top_fraction,
                pool: self.pool_source()?,
                ..ShrinkConfig::default()
            },
            classifier,
            operators: OperatorSettings {
                pr: self.operators.pr,
                uniform_rate: self.operators.uniform_rate,
                revival_window: self.operators.revival_window,
                ..OperatorSettings::default()
            },
            train_fraction: self.train_fraction,
        })
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl DatasetSpec {
    /// Loads or generates the dataset. CSV files are loaded unnormalized;
    /// normalization is fitted per train split inside each run.
    pub fn materialize(&self, base: &Path) -> Result<Dataset> {
        if let Some(spec) = &self.synthetic {
            let (data, _) = dataset::generate_synthetic(
                spec.instances,
                spec.features,
                spec.informative,
                spec.seed,
            )
            .with_context(|| format!("generating dataset {:?}", self.name))?;
            return Ok(data);
        }
        let path = resolve(base, self.path.as_ref().expect("validated"));
        let label_column = match (&self.label_name, &self.label_index) {
            (Some(name), None) => LabelColumn::Name(name.clone()),
            (None, Some(index)) => LabelColumn::Index(*index),
            _ => LabelColumn::Last,
        };
        let nan_policy = match self.nan_policy.as_deref() {
            None | Some("reject") => NanPolicy::Reject,
            Some("impute_mean") => NanPolicy::ImputeMean,
            Some(other) => bail!("unknown nan policy {other:?}"),
        };
        let options = CsvOptions {
            label_column,
            header: self.header,
            delimiter: self.delimiter.as_bytes()[0],
            normalize: false,
            nan_policy,
        };
        dataset::load_csv(&path, &options)
            .with_context(|| format!("loading dataset {:?} from {}", self.name, path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"
            variants = ["lmsss", "nsga2"]

            [[datasets]]
            name = "synth"
            [datasets.synthetic]
            instances = 100
            features = 50
            informative = 5
            seed = 1
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate(Path::new(".")).unwrap();
        assert_eq!(cfg.runs, 31);
        assert_eq!(cfg.budget.pop_size, 200);
        assert_eq!(cfg.budget.total_generations, 100);
        assert_eq!(cfg.shrink.n_mic, 1000);
        assert_eq!(cfg.shrink.n_nds, 200);
        assert_eq!(cfg.operators.pr, 0.7);
        assert_eq!(cfg.classifier.k, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            variants = ["lmsss"]
            tyop = 3

            [[datasets]]
            name = "x"
            path = "x.csv"
        "#;
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn missing_file_is_reported_with_path() {
        let text = r#"
            variants = ["lmsss"]

            [[datasets]]
            name = "ghost"
            path = "does/not/exist.csv"
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        let err = cfg.validate(Path::new("/tmp")).unwrap_err();
        assert!(err.to_string().contains("does/not/exist.csv"), "{err}");
    }

    #[test]
    fn bad_variant_is_rejected() {
        let text = r#"
            variants = ["lmsss", "spea2"]

            [[datasets]]
            name = "synth"
            [datasets.synthetic]
            instances = 100
            features = 50
            informative = 5
            seed = 1
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
    }
}
