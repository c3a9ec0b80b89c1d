//! The multitask neural model: shared encoder, two task-specific decoders
//! with biaffine pointers and labelers, a leaf-unary tag head, training,
//! prediction, and checkpointing.

mod checkpoint;
mod config;
mod external;
mod network;
mod train;
mod vocab;

pub use config::ModelConfig;
pub use external::parse_external_embeddings;
pub use network::{
    LossBreakdown, Model, PredictOptions, Prediction, SentenceInput, Task,
};
pub use train::{train, DevSets, EpochStats, ParallelSentence};
pub use vocab::{Lexicon, Vocab, NONE_TAG, UNK};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{tokens} tokens but {vectors} external vectors")]
    ExternalAlignment { tokens: usize, vectors: usize },
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint version {found} is not supported (reader supports {supported})")]
    CheckpointVersion { found: u32, supported: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
