//! Controllable text simplification toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`textproc`]: tokenization, syllables, edit distance, n-grams, bag-of-words cosine.
//! * [`metrics`]: BLEU, SARI, FKGL, exact-match and added/deleted word proportions,
//!   plus corpus statistics.
//! * [`control`]: control-token computation, bucketing and rendering, noising, and
//!   back-translation example construction and loss.
//! * [`models`]: the conditional sequence-model interface and small built-in models.
//! * [`decode`]: beam search with length, exact-match and FKGL penalties.
//! * [`tune`]: grid search over penalty coefficients.
//!
//! Corpus-level work is data-parallel through [`par`] when the `parallel` feature
//! (on by default) is enabled; every reduction is order-preserving, so results are
//! identical for any thread count.

pub mod control;
pub mod decode;
pub mod metrics;
pub mod models;
pub mod par;
pub mod textproc;
pub mod tune;

pub use control::{BtExample, ControlTokens, Direction, FrequencyTable};
pub use decode::{BeamConfig, Hypothesis, PenaltyConfig};
pub use metrics::{CorpusStats, EvalReport};
pub use models::SequenceModel;
pub use textproc::Sentence;
