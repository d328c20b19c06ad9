//! Training and evaluation for dialogic-instruction detection in classroom
//! utterances.
//!
//! The crate is organized around a small, fully deterministic pipeline:
//!
//! - [`taxonomy`]: the fixed nine-category label set.
//! - [`corpus`]: labeled utterances, synthetic corpus generation, and a
//!   character-level ASR-noise channel calibrated to a target error rate.
//! - [`encoder`]: a pluggable sentence encoder. The tiny reference encoder
//!   maps a `[CLS]`-prefixed character sequence to a fixed-dimension
//!   representation plus class probabilities and computes analytic gradients.
//! - [`loss`]: the multi-task objective — summed cross-entropy mixed with a
//!   squared-hinge margin loss over cross-category pairs.
//! - [`mining`]: a bounded pool of currently misclassified examples and the
//!   partner sampler that draws contrastive pairs from it.
//! - [`trainer`]: the SGD training loop with pair assignment, early stopping,
//!   and structured step/epoch logging.
//! - [`eval`]: per-category binary test sets and accuracy/precision/recall/F1
//!   with macro and micro averaging.
//!
//! Everything here is `no_std + alloc` compatible; file formats, checkpoints,
//! and the command-line front end live in the companion `dialogic-cli` crate.
//! All randomness flows through explicitly seeded [`rng::Rng`] streams, so
//! identical inputs and seeds produce identical outputs.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod loss;
pub mod mining;
pub mod rng;
pub mod taxonomy;
pub mod trainer;

pub use error::{CoreError, Result};
