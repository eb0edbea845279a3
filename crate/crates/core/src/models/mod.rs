//! Conditional sequence models `P(target | source)` consumed by the decoder
//! and the back-translation loss.
//!
//! Models see the source as strings (control-token prefix included) and the
//! target prefix as ids of their own [`Vocab`]. Every vocabulary contains the
//! end-of-sequence marker at id 0; once it has been emitted the state is
//! absorbing.

use std::collections::HashMap;

use thiserror::Error;

mod ngram;
mod noisy_copy;
mod table;

pub use ngram::NgramModel;
pub use noisy_copy::{NoisyCopyModel, NoisyCopyParams};
pub use table::TableModel;

pub const EOS: &str = "</s>";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("token {0:?} is not in the model vocabulary")]
    Oov(String),
    #[error("prefix id {0} is outside the vocabulary")]
    BadId(u32),
    #[error("prefix cannot be produced by the model for this source")]
    Unreachable,
    #[error("distribution does not sum to 1 (sum = {0})")]
    Unnormalized(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty training corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const EOS: TokenId = TokenId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned output vocabulary; id 0 is always [`EOS`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.insert(EOS);
        v
    }
}

impl Vocab {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocab::default();
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    pub fn insert(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = TokenId(self.tokens.len() as u32);
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>, ModelError> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| ModelError::Oov(t.as_ref().to_string()))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }
}

/// Log-probabilities indexed by [`TokenId`]; `-inf` marks impossible tokens.
pub type LogProbs = Vec<f64>;

pub(crate) fn point_mass(len: usize, id: TokenId) -> LogProbs {
    let mut lp = vec![f64::NEG_INFINITY; len];
    lp[id.index()] = 0.0;
    lp
}

/// Converts non-negative weights to log-probabilities.
pub(crate) fn normalized_logs(weights: &[f64]) -> LogProbs {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| if w > 0.0 { (w / total).ln() } else { f64::NEG_INFINITY })
        .collect()
}

pub trait SequenceModel: Send + Sync {
    fn vocab(&self) -> &Vocab;

    /// Distribution over the next token for a non-terminal prefix.
    fn step_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError>;

    /// Distribution over the next token; validates the prefix and makes the
    /// end-of-sequence state absorbing.
    fn next_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        let v = self.vocab().len();
        if let Some(bad) = prefix.iter().find(|t| t.index() >= v) {
            return Err(ModelError::BadId(bad.0));
        }
        if prefix.contains(&TokenId::EOS) {
            return Ok(point_mass(v, TokenId::EOS));
        }
        self.step_logprobs(source, prefix)
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for &M {
    fn vocab(&self) -> &Vocab {
        (**self).vocab()
    }

    fn step_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        (**self).step_logprobs(source, prefix)
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for Box<M> {
    fn vocab(&self) -> &Vocab {
        (**self).vocab()
    }

    fn step_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        (**self).step_logprobs(source, prefix)
    }
}

/// Trains an add-k smoothed n-gram language model that ignores the source.
pub fn ngram_lm_train<S: AsRef<str>>(
    corpus: &[Vec<S>],
    order: usize,
    k: f64,
) -> Result<NgramModel, ModelError> {
    NgramModel::train(corpus, order, k)
}
