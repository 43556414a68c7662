//! Linear-chain CRF sequence labeler: features, exact inference, weighted
//! likelihood training with warm-up/decay scheduling, class balancing and
//! early stopping.

mod balance;
mod crf;
mod features;
mod model;
mod schedule;
mod train;

pub use balance::{class_weights, oversample, ClassWeights};
pub use crf::{
    data_loss_and_gradient, emission_scores, log_partition, nll_and_gradient,
    segment_nll_and_gradient, segment_weight, sequence_score, tag_corpus, viterbi, viterbi_path, SparseGradient,
};
pub use features::{extract_all, extract_features, word_shape, FeatureTemplate, FeatureTemplateSet};
pub use model::{
    corpus_types, label_alphabet, load_model, save_model, CrfModel, EncodedSegment, MODEL_MAGIC,
    MODEL_VERSION,
};
pub use schedule::{lr_at, warmup_steps};
pub use train::{
    corpus_loss, prepare_model, run_epochs, train, EarlyStopping, EpochRun, TrainConfig,
    TrainOutcome,
};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::EvalError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelerError {
    #[error("position {position} out of range for segment of {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("unknown feature template {0:?}")]
    UnknownTemplate(String),
    #[error("invalid label alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("label {0} is not in the model's alphabet")]
    UnknownLabel(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("validation corpus has no entities; F1 would be undefined")]
    NoValidationEntities,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite weights after update")]
    NonFinite,
    #[error("model file version {found} does not match supported version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
