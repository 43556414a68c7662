//! Noise-aware named entity recognition for OCR'd documents.
//!
//! The crate models OCR errors empirically, injects synthetic errors into
//! clean training data, and trains a linear-chain CRF labeler in several
//! stages (gazetteer pretraining, then fine-tuning of noisy, clean and
//! artificially noised variants), scored with strict entity-level F1.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod io;
pub mod labeler;
pub mod noise;
pub mod pipeline;

pub use corpus::{Corpus, Document, EntitySpan, EntityType, Label, Segment, Token};
pub use eval::{EvalReport, EpochRecord};
pub use labeler::{CrfModel, TrainConfig};
pub use noise::{ErrorEntry, ErrorTable};
