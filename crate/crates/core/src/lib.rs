//! Multi-representational parsing toolkit.
//!
//! The crate converts between constituent and dependency tree representations
//! (including discontinuous constituents and non-projective dependencies),
//! derives left-to-right SHIFT-ATTACH-p transition sequences, and trains a
//! single multitask pointer-network model that produces both representations
//! for an input sentence.
//!
//! Pipeline overview:
//!
//! * [`treebank`] reads and writes bracketed, discbracket and CoNLL-X files.
//! * [`encoding`] turns headed constituent trees into augmented dependency
//!   trees labelled `SYMBOL#k` and decodes them back.
//! * [`transition`] is the pointer transition system (oracle extraction,
//!   incremental legality, greedy decoding).
//! * [`nn`] is a small reverse-mode autodiff core the model is built on.
//! * [`model`] is the shared-encoder / two-decoder neural network with
//!   training, prediction and checkpointing.
//! * [`eval`] scores attachment accuracy and labelled bracketing F1.

pub mod cli;
pub mod encoding;
pub mod eval;
pub mod model;
pub mod nn;
pub mod transition;
pub mod tree;
pub mod treebank;

pub use tree::{AugmentedDepTree, ConstituentTree, DependencyTree, HeadedTree, Token};
