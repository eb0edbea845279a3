use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{normalized_logs, point_mass, LogProbs, ModelError, SequenceModel, TokenId, Vocab};
use crate::control::{leading_controls, ControlKind};

/// Parameters of [`NoisyCopyModel`]. Whatever mass is left after copy,
/// delete and stop goes to substitution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCopyParams {
    pub copy_prob: f64,
    #[serde(default)]
    pub delete_prob: f64,
    #[serde(default)]
    pub stop_prob: f64,
    /// Word to simpler replacements.
    #[serde(default)]
    pub lexicon: BTreeMap<String, Vec<String>>,
}

impl NoisyCopyParams {
    pub fn copy_only() -> Self {
        NoisyCopyParams {
            copy_prob: 1.0,
            delete_prob: 0.0,
            stop_prob: 0.0,
            lexicon: BTreeMap::new(),
        }
    }

    pub fn substitute_prob(&self) -> f64 {
        (1.0 - self.copy_prob - self.delete_prob - self.stop_prob).max(0.0)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("copy_prob", self.copy_prob),
            ("delete_prob", self.delete_prob),
            ("stop_prob", self.stop_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::BadParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        let sum = self.copy_prob + self.delete_prob + self.stop_prob;
        if sum > 1.0 + 1e-12 {
            return Err(ModelError::BadParameter(format!(
                "copy + delete + stop = {sum} exceeds 1"
            )));
        }
        Ok(())
    }
}

/// A training-free model that walks the source left to right, at each
/// position copying the word, replacing it from the lexicon, skipping it
/// (emitting the following word), or stopping early.
///
/// A leading `LevSim` control token `l` moves `(1 - l)` of the copy mass
/// evenly to substitution and deletion; a `WordRank` token `w` moves a further
/// `(1 - w)` of the remaining copy mass to substitution. Other control tokens
/// are read and ignored. Moves that are impossible at a position (no
/// replacement listed, nothing left to skip to, stopping before any output)
/// are dropped and the rest renormalized.
///
/// The position in the source is a hidden state; the next-token distribution
/// marginalizes over all positions consistent with the prefix.
#[derive(Debug, Clone)]
pub struct NoisyCopyModel {
    params: NoisyCopyParams,
    vocab: Vocab,
    /// Replacement ids per word id.
    synonyms: Vec<Vec<TokenId>>,
}

struct Weights {
    copy: f64,
    substitute: f64,
    delete: f64,
    stop: f64,
}

impl NoisyCopyModel {
    /// `tokens` must cover every source word the model will be asked to copy.
    pub fn new<I, S>(params: NoisyCopyParams, tokens: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        params.validate()?;
        let mut vocab = Vocab::new(tokens);
        for (w, syns) in &params.lexicon {
            vocab.insert(w);
            for s in syns {
                vocab.insert(s);
            }
        }
        let mut synonyms = vec![Vec::new(); vocab.len()];
        for (w, syns) in &params.lexicon {
            let id = vocab.id(w).unwrap();
            let mut ids: Vec<TokenId> = syns.iter().map(|s| vocab.id(s).unwrap()).filter(|&s| s != id).collect();
            ids.sort();
            ids.dedup();
            synonyms[id.index()] = ids;
        }
        Ok(NoisyCopyModel {
            params,
            vocab,
            synonyms,
        })
    }

    pub fn params(&self) -> &NoisyCopyParams {
        &self.params
    }

    fn weights(&self, source: &[String]) -> (Weights, usize) {
        let (controls, consumed) = leading_controls(source);
        let get = |k: ControlKind| {
            controls
                .iter()
                .find(|(kind, _)| *kind == k)
                .map_or(1.0, |(_, b)| b.value().min(1.0))
        };
        let lev = get(ControlKind::LevSim);
        let rank = get(ControlKind::WordRank);
        let p = &self.params;
        let lev_shift = p.copy_prob * (1.0 - lev);
        let after_lev = p.copy_prob * lev;
        let rank_shift = after_lev * (1.0 - rank);
        (
            Weights {
                copy: after_lev - rank_shift,
                substitute: p.substitute_prob() + lev_shift / 2.0 + rank_shift,
                delete: p.delete_prob + lev_shift / 2.0,
                stop: p.stop_prob,
            },
            consumed,
        )
    }

    /// Outgoing moves at position `i`: (emitted token, next position, weight),
    /// with `None` as the next position for stopping.
    fn moves(&self, w: &Weights, src: &[TokenId], i: usize, emitted: usize) -> Vec<(TokenId, Option<usize>, f64)> {
        let n = src.len();
        if i >= n {
            return vec![(TokenId::EOS, None, 1.0)];
        }
        let mut out = Vec::with_capacity(4);
        if w.copy > 0.0 {
            out.push((src[i], Some(i + 1), w.copy));
        }
        let syns = &self.synonyms[src[i].index()];
        if w.substitute > 0.0 && !syns.is_empty() {
            let each = w.substitute / syns.len() as f64;
            out.extend(syns.iter().map(|&s| (s, Some(i + 1), each)));
        }
        if w.delete > 0.0 && i + 1 < n {
            out.push((src[i + 1], Some(i + 2), w.delete));
        }
        if w.stop > 0.0 && emitted > 0 {
            out.push((TokenId::EOS, None, w.stop));
        }
        let total: f64 = out.iter().map(|m| m.2).sum();
        if total <= 0.0 {
            return vec![(TokenId::EOS, None, 1.0)];
        }
        for m in &mut out {
            m.2 /= total;
        }
        out
    }
}

impl SequenceModel for NoisyCopyModel {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn step_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        let (w, consumed) = self.weights(source);
        let src = self.vocab.encode(&source[consumed..])?;
        let n = src.len();
        let mut alpha = vec![0.0; n + 1];
        alpha[0] = 1.0;
        for (step, &tok) in prefix.iter().enumerate() {
            let mut next = vec![0.0; n + 1];
            for (i, &a) in alpha.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (t, to, p) in self.moves(&w, &src, i, step) {
                    if t == tok {
                        if let Some(j) = to {
                            next[j] += a * p;
                        }
                    }
                }
            }
            let z: f64 = next.iter().sum();
            if z == 0.0 {
                return Err(ModelError::Unreachable);
            }
            alpha = next.into_iter().map(|x| x / z).collect();
        }
        let mut probs = vec![0.0; self.vocab.len()];
        for (i, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (t, _, p) in self.moves(&w, &src, i, prefix.len()) {
                probs[t.index()] += a * p;
            }
        }
        // single surviving move: keep probability exactly 1
        if let Some(only) = single_support(&probs) {
            return Ok(point_mass(probs.len(), only));
        }
        Ok(normalized_logs(&probs))
    }
}

fn single_support(probs: &[f64]) -> Option<TokenId> {
    let mut it = probs.iter().enumerate().filter(|(_, &p)| p > 0.0);
    let first = it.next()?;
    it.next().is_none().then_some(TokenId(first.0 as u32))
}
