//! Graph data model, vocabulary, serialization, labels and dataset splits.

mod graph;
mod labels;
mod split;
mod vocab;

pub use graph::{Edge, EdgeSet, ProgramGraph, PropertyKind};
pub use labels::{
    assemble_instances, compute_label, portfolio_of, read_labels, read_labels_path, LabelPenalty,
    LabeledInstance, Outcome, VerifierLabelRecord,
};
pub use split::{split_dataset, split_indices, DatasetSplit, SplitRatios, SplitWarning};
pub use vocab::{encode_onehot, TokenVocabulary, DEFAULT_MANIFEST, UNKNOWN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphIoError {
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error("kind index {index} out of range for vocabulary of {len}")]
    Index { index: usize, len: usize },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown property '{0}'")]
    Property(String),
    #[error("labels: {0}")]
    Labels(String),
    #[error("duplicate label record for ({program}, {property}, {verifier})")]
    DuplicateRecord {
        program: String,
        property: String,
        verifier: String,
    },
    #[error("split ratios {0:?} must be positive and sum to 1")]
    Ratios([f64; 3]),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
