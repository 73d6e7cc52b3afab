//! Error type shared by the core operations.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Both count models were empty, so no shared vocabulary exists.
    #[error("cannot smooth a pair of empty count models: no vocabulary")]
    EmptyVocabulary,

    /// Donor account has fewer messages than the span to inject; redraw a donor.
    #[error("donor {donor_id} has {available} messages, needs {needed}")]
    DonorTooShort {
        donor_id: String,
        available: usize,
        needed: usize,
    },

    /// Victim account has fewer than two messages and cannot host an attack.
    #[error("victim {victim_id} has {count} messages, needs at least 2")]
    VictimTooShort { victim_id: String, count: usize },

    /// Interval sampling needs at least two messages.
    #[error("account has {count} messages, interval sampling needs at least 2")]
    AccountTooShort { count: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Bag-of-words vocabulary became empty after document-frequency filtering.
    #[error("bag-of-words vocabulary empty after df filtering")]
    EmptyBowVocabulary,

    /// Training data contains only one class; a classifier cannot be fit.
    #[error("training data contains a single class")]
    SingleClass,

    /// Stratified folding requires every class to have at least k members.
    #[error("class {class} has {count} members, fewer than k={k} folds")]
    ClassSmallerThanK { class: u8, count: usize, k: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An account needed for an operation is missing from the corpus.
    #[error("unknown account id {0}")]
    UnknownAccount(String),

    /// An account lacks a gold label where one is required.
    #[error("account {0} has no benign/compromised label")]
    UnlabeledAccount(String),
}
