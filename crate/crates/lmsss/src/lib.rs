//! Multi-objective evolutionary feature selection with a two-phase
//! search-space shrinking front end.
//!
//! The library is organized around the stages of the algorithm:
//!
//! - [`dataset`]: loading, validation, stratified splitting, synthetic data
//! - [`classifier`]: kNN with leave-one-out fitness and train/test scoring
//! - [`mic`]: maximal-information-coefficient feature scoring
//! - [`moo`]: dominance, non-dominated sorting, crowding, hypervolume, IGD
//! - [`mask`] and [`ea`]: binary genomes and the evolutionary engine
//! - [`shrink`]: the phase-1 pipeline that reduces the search space
//! - [`pipeline`]: full algorithm variants over a seeded split
//! - [`stats`]: rank-sum significance marks and result tables

pub mod classifier;
pub mod dataset;
pub mod ea;
pub mod error;
pub mod mask;
pub mod mic;
pub mod moo;
pub mod pipeline;
pub mod seed;
pub mod shrink;
pub mod stats;

pub use classifier::{ClassifierConfig, EvalResult, LossMetric};
pub use dataset::{CsvOptions, Dataset, LabelColumn, NanPolicy, SplitPair};
pub use ea::{CrossoverOp, EAConfig, EARun, Individual, InitScheme, MutationRate};
pub use error::{Error, Result};
pub use mask::FeatureMask;
pub use mic::{MicConfig, MicScore};
pub use moo::{Front, ObjectiveVector};
pub use pipeline::{Budget, OperatorSettings, PipelineConfig, RunReport, Variant};
pub use shrink::{ShrinkConfig, ShrinkResult};
pub use stats::{Metric, Table};
