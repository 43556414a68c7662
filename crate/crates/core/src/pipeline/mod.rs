//! Multi-stage training orchestration: gazetteer pretraining data, the
//! intermediate model, and the noisy/clean/artificial comparison scored on a
//! shared noisy test partition.

mod config;
mod experiment;
mod gazetteer;
pub mod synth;

pub use config::{ExperimentConfig, ExperimentSettings, ValidationMode};
pub use experiment::{
    build_partitions, finetune_variant, load_experiment_data, pretrain, pretrain_holdout,
    run_experiment, run_experiment_with, segments_disjoint, variant_corpus, ExperimentData,
    ExperimentReport, PartitionSizes, Partitions, PretrainSummary, ReferenceScores, Variant,
    VariantResult, REFERENCE_ARTIFICIAL_F1, REFERENCE_JOB_TITLE_F1, SEED_ARTIFICIAL,
    SEED_NOISY_TEST, SEED_NOISY_TRAIN, SEED_NOISY_VAL, SEED_PRETRAIN_HOLDOUT,
};
pub use gazetteer::{gazetteer_corpus, load_gazetteers, parse_gazetteer, Gazetteer, LoadedGazetteers};

use thiserror::Error;

use crate::labeler::LabelerError;
use crate::noise::NoiseError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("configuration line {line}: {reason}")]
    ConfigLine { line: usize, reason: String },
    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),
    #[error("gazetteer: {0}")]
    Gazetteer(String),
    #[error("pretraining data must be O-free, found {0} O labels")]
    OLabelsInPretraining(usize),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Labeler(#[from] LabelerError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}
