//! Beam search with simplicity-aware penalties.
//!
//! A hypothesis is ranked by `logprob - penalty_logsum`, i.e. its probability
//! divided by `LP · EMP · FKGLP`. In [`PenaltyMode::PerStep`] the penalties
//! are applied to every prefix while pruning; in [`PenaltyMode::Final`] the
//! beam is pruned on log-probability and penalties only reorder the
//! finished hypotheses.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelError, SequenceModel, TokenId, EOS};

mod penalty;

pub use penalty::{features, penalty_logsum, PenaltyConfig, PenaltyFeatures, SourceProfile};
use penalty::TokenTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no candidates to rescore")]
    NoCandidates,
    #[error("invalid beam configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PenaltyMode {
    #[default]
    PerStep,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Maximum number of tokens before end-of-sequence.
    pub max_len: usize,
    #[serde(default)]
    pub mode: PenaltyMode,
}

impl BeamConfig {
    pub fn new(beam_size: usize, max_len: usize) -> Self {
        BeamConfig {
            beam_size,
            max_len,
            mode: PenaltyMode::PerStep,
        }
    }

    fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeError::BadConfig("beam_size must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(DecodeError::BadConfig("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Output tokens; complete hypotheses end with [`EOS`].
    pub tokens: Vec<String>,
    pub logprob: f64,
    pub adjusted_score: f64,
    pub complete: bool,
}

impl Hypothesis {
    /// Tokens without the end-of-sequence marker.
    pub fn output(&self) -> &[String] {
        match self.tokens.last() {
            Some(t) if t == EOS => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }

    /// Recomputes the adjusted score under another penalty configuration.
    pub fn rescored<S: AsRef<str>>(&self, source: &[S], cfg: &PenaltyConfig) -> Hypothesis {
        Hypothesis {
            adjusted_score: self.logprob - penalty_logsum(self.output(), source, cfg),
            ..self.clone()
        }
    }
}

/// Best first: higher adjusted score, then higher log-probability, then
/// lexicographically smaller tokens.
pub fn ranking(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.adjusted_score
        .total_cmp(&a.adjusted_score)
        .then_with(|| b.logprob.total_cmp(&a.logprob))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Finished hypotheses, best first; a single unfinished one when nothing
    /// completed within `max_len`.
    pub hypotheses: Vec<Hypothesis>,
    pub truncated: bool,
}

impl DecodeOutput {
    pub fn best(&self) -> &Hypothesis {
        &self.hypotheses[0]
    }
}

#[derive(Clone)]
struct Node {
    ids: Vec<TokenId>,
    tokens: Vec<String>,
    logprob: f64,
    features: PenaltyFeatures,
    adjusted: f64,
    complete: bool,
}

impl Node {
    fn key(&self, mode: PenaltyMode) -> f64 {
        match mode {
            PenaltyMode::PerStep => self.adjusted,
            PenaltyMode::Final => self.logprob,
        }
    }

    fn into_hypothesis(self) -> Hypothesis {
        Hypothesis {
            tokens: self.tokens,
            logprob: self.logprob,
            adjusted_score: self.adjusted,
            complete: self.complete,
        }
    }
}

fn node_order(a: &Node, b: &Node, mode: PenaltyMode) -> Ordering {
    b.key(mode)
        .total_cmp(&a.key(mode))
        .then_with(|| b.logprob.total_cmp(&a.logprob))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search over `model` for one source (control prefix included).
pub fn beam_search<M: SequenceModel + ?Sized>(
    model: &M,
    source: &[String],
    beam: &BeamConfig,
    penalties: &PenaltyConfig,
) -> Result<DecodeOutput, DecodeError> {
    beam.validate()?;
    if !penalties.is_finite() {
        return Err(DecodeError::BadConfig("penalty coefficients must be finite".into()));
    }
    let vocab = model.vocab();
    let profile = SourceProfile::new(source);
    let table = TokenTable::new(vocab, &profile);

    let mut open = vec![Node {
        ids: Vec::new(),
        tokens: Vec::new(),
        logprob: 0.0,
        features: PenaltyFeatures::default(),
        adjusted: 0.0,
        complete: false,
    }];
    let mut pool: Vec<Node> = Vec::new();

    for step in 0..=beam.max_len {
        let last_step = step == beam.max_len;
        let mut candidates = Vec::new();
        for node in &open {
            let lp = model.next_logprobs(source, &node.ids)?;
            for (i, &l) in lp.iter().enumerate() {
                let id = TokenId(i as u32);
                if l == f64::NEG_INFINITY || (last_step && id != TokenId::EOS) {
                    continue;
                }
                let complete = id == TokenId::EOS;
                let prior = node.ids.iter().filter(|&&x| x == id).count();
                let features = if complete {
                    node.features
                } else {
                    table.extend(&node.features, id, prior)
                };
                let logprob = node.logprob + l;
                let mut ids = node.ids.clone();
                ids.push(id);
                let mut tokens = node.tokens.clone();
                tokens.push(vocab.token(id).to_string());
                candidates.push(Node {
                    ids,
                    tokens,
                    logprob,
                    features,
                    adjusted: logprob - features.logsum(profile.norm_sq, penalties),
                    complete,
                });
            }
        }
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|a, b| node_order(a, b, beam.mode));
        let mut next = Vec::with_capacity(beam.beam_size);
        for (rank, c) in candidates.into_iter().enumerate() {
            if c.complete {
                if rank < beam.beam_size {
                    pool.push(c);
                }
            } else {
                next.push(c);
                if next.len() == beam.beam_size {
                    break;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        open = next;
    }

    if pool.is_empty() {
        let best = open
            .into_iter()
            .min_by(|a, b| node_order(a, b, PenaltyMode::PerStep))
            .expect("beam is never empty");
        return Ok(DecodeOutput {
            hypotheses: vec![best.into_hypothesis()],
            truncated: true,
        });
    }
    let mut hyps: Vec<Hypothesis> = pool.into_iter().map(Node::into_hypothesis).collect();
    hyps.sort_by(ranking);
    Ok(DecodeOutput {
        hypotheses: hyps,
        truncated: false,
    })
}

/// Picks the best of a fixed candidate set under `penalties`.
pub fn rescore<S: AsRef<str>>(
    candidates: &[Hypothesis],
    source: &[S],
    penalties: &PenaltyConfig,
) -> Result<Hypothesis, DecodeError> {
    candidates
        .iter()
        .map(|h| h.rescored(source, penalties))
        .min_by(ranking)
        .ok_or(DecodeError::NoCandidates)
}

/// Decodes every source independently; results follow input order.
pub fn decode_corpus<M: SequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<String>],
    beam: &BeamConfig,
    penalties: &PenaltyConfig,
) -> Vec<Result<DecodeOutput, DecodeError>> {
    crate::par::map(sources, |s| beam_search(model, s, beam, penalties))
}
