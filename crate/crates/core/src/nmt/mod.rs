//! Desk-scale attention encoder–decoder over AST path contexts: vocabulary
//! handling, context encoding, teacher-forced training with Adam, gradient
//! verification, greedy/beam decoding, and JSON checkpoints.

pub mod decode;
pub mod forward;
pub mod lstm;
pub mod math;
pub mod model;
pub mod train;
pub mod vocab;

use thiserror::Error;

pub use decode::{decode_beam, decode_greedy, BeamHypothesis, GreedyDecode};
pub use forward::{effective_context_count, encode_contexts, example_loss};
pub use model::{Checkpoint, HyperParams, ModelParams, CHECKPOINT_VERSION};
pub use train::{grad_check, mean_loss, numeric_grad, relative_error, train, TrainReport};
pub use vocab::{
    build_vocab, EncodedContext, EncodedExample, NmtExample, TokenTable, Vocab, EOS, PAD, SOS,
    UNK,
};

#[derive(Debug, Error)]
pub enum NmtError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid hyperparameter: {0}")]
    BadHyper(String),
    #[error("{kind} id {id} out of range for vocabulary of size {size}")]
    UnknownId {
        kind: &'static str,
        id: usize,
        size: usize,
    },
    #[error(
        "loss became non-finite at epoch {epoch}; lower the learning rate (currently {lr})"
    )]
    NonFiniteLoss { epoch: usize, lr: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint shape mismatch in parameter group {0}")]
    ShapeMismatch(String),
}
