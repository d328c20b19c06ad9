//! Crate-wide error type.

use alloc::string::String;
use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, CoreError>;

/// Errors raised by corpus handling, encoding, loss evaluation, mining,
/// training, and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// A record carried a label name outside the fixed taxonomy.
    #[error("record {uid:?}: unknown label {label:?}")]
    UnknownLabel { uid: String, label: String },

    /// A label id outside `0..CATEGORY_COUNT`.
    #[error("label id {id} out of range (taxonomy has {count} categories)")]
    LabelIdOutOfRange { id: usize, count: usize },

    /// Two records in one dataset share a uid.
    #[error("duplicate uid {uid:?}")]
    DuplicateUid { uid: String },

    /// Record text is empty after trimming.
    #[error("record {uid:?}: text is empty after trimming")]
    EmptyText { uid: String },

    /// A category has no templates to instantiate.
    #[error("no templates provided for category {category:?}")]
    MissingTemplates { category: &'static str },

    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation received empty input where at least one element is required.
    #[error("{0} must be non-empty")]
    EmptyInput(&'static str),

    /// A token sequence exceeds the configured maximum length.
    #[error("sequence of {len} ids exceeds max_seq_len {max}")]
    SequenceTooLong { len: usize, max: usize },

    /// A token sequence does not start with the reserved [CLS] id.
    #[error("token sequence does not start with the [CLS] id")]
    MissingClsPrefix,

    /// A token id that does not fit the embedding table.
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    /// Two vectors that must agree in dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A probability vector does not sum to 1 within tolerance.
    #[error("probability vector sums to {sum} (expected 1 within 1e-4)")]
    UnnormalizedProbs { sum: f64 },

    /// A class index is not valid for the probability vectors at hand.
    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },

    /// A contrastive pair whose anchor and partner share a label.
    #[error("pair at position {position} has matching labels (class {label})")]
    SameLabelPair { position: usize, label: usize },

    /// Pairs are required by the loss configuration but absent.
    #[error("pair assignment required when gamma < 1 and pairing is enabled")]
    MissingPairs,

    /// Pairs were supplied although pairing is disabled.
    #[error("pair assignment supplied although pairing_mode is none")]
    UnexpectedPairs,

    /// Partner sampling found no differing-label example anywhere.
    #[error("degenerate dataset: no example with a label other than class {label}")]
    DegenerateDataset { label: usize },

    /// The loss or a gradient became non-finite.
    #[error("non-finite value in {term}: batch uids [{uids}]")]
    NonFinite { term: &'static str, uids: String },

    /// A binary test set cannot be built at the requested size.
    #[error("category {category:?}: need {needed} {side} examples, found {available}")]
    InsufficientExamples {
        category: &'static str,
        side: &'static str,
        needed: usize,
        available: usize,
    },

    /// Aggregation is missing a category's metrics.
    #[error("metrics missing for category {category:?}")]
    MissingCategory { category: &'static str },

    /// A required dataset split has no examples.
    #[error("dataset split {split:?} is empty")]
    EmptySplit { split: &'static str },
}
