//! Graph-attention ranker: GAT layers over the enabled edge sets, jumping
//! knowledge, attention pooling and a property-conditioned scoring head.

pub mod config;
pub mod container;
mod forward;
mod loss;
mod params;

pub use config::{ModelConfig, PropertyEncoding, Widths, MAX_GAT_LAYERS};
pub use forward::{
    attention_pool, attention_pool_on_tape, forward, gat_layer, gat_layer_on_tape,
    jumping_knowledge, load_params, DenseParams, Forward, GatLayerParams, GraphInput,
};
pub use loss::{margin_rank_loss, margin_rank_loss_on_tape, ranked_pairs};
pub use params::{layout, Dense, GatLayer, ModelParameters, Structure};

use serde::Serialize;
use thiserror::Error;

use crate::graphio::{ProgramGraph, TokenVocabulary};
use crate::tensor::{Matrix, Tape, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("vocabulary mismatch: model expects {expected}, got {found}")]
    VocabMismatch { expected: String, found: String },
    #[error("node kind {index} outside the model's vocabulary of {len}")]
    KindOutOfRange { index: usize, len: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model file: {0}")]
    Container(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Scores for one (program, property) instance and the induced ordering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingResult {
    pub scores: Vec<f64>,
    /// Verifier indices, best first; ties by ascending index.
    pub ordering: Vec<usize>,
}

impl RankingResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut ordering: Vec<usize> = (0..scores.len()).collect();
        ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { scores, ordering }
    }

    pub fn top(&self) -> usize {
        self.ordering[0]
    }
}

impl ModelParameters {
    pub fn check_vocabulary(&self, vocab: &TokenVocabulary) -> Result<(), ModelError> {
        let found = vocab.fingerprint();
        if found != self.vocab_fingerprint {
            return Err(ModelError::VocabMismatch {
                expected: self.vocab_fingerprint.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn input(&self, g: &ProgramGraph) -> Result<GraphInput, ModelError> {
        GraphInput::new(g, &self.config, self.vocab_len)
    }
}

/// Scores every verifier for `g`.
pub fn predict(g: &ProgramGraph, params: &ModelParameters) -> Result<RankingResult, ModelError> {
    let input = params.input(g)?;
    let mut tape = Tape::new();
    let vars = load_params(&mut tape, params, false);
    let structure = params.shape_of(&vars);
    let out = forward(&mut tape, &structure, &params.config, &input, None)?;
    Ok(RankingResult::from_scores(
        tape.value(out.scores).as_slice().to_vec(),
    ))
}

/// [`predict`] after checking that `vocab` is the model's vocabulary.
pub fn predict_with(
    g: &ProgramGraph,
    vocab: &TokenVocabulary,
    params: &ModelParameters,
) -> Result<RankingResult, ModelError> {
    params.check_vocabulary(vocab)?;
    predict(g, params)
}

/// Margin loss for one instance and its gradient for every parameter block.
pub fn loss_and_gradient(
    params: &ModelParameters,
    input: &GraphInput,
    labels: &[f64],
    margin: f64,
) -> Result<(f64, Vec<Matrix>), ModelError> {
    let mut tape = Tape::new();
    let vars = load_params(&mut tape, params, true);
    let structure = params.shape_of(&vars);
    let out = forward(&mut tape, &structure, &params.config, input, None)?;
    let loss = margin_rank_loss_on_tape(&mut tape, out.scores, labels, margin)?;
    tape.backward(loss)?;
    let grads = vars
        .iter()
        .zip(params.blocks())
        .map(|(&v, b)| {
            tape.grad(v)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(b.rows(), b.cols()))
        })
        .collect();
    Ok((tape.value(loss).item(), grads))
}
