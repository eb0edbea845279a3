use std::collections::HashMap;

use super::{LogProbs, ModelError, SequenceModel, TokenId, Vocab};

/// Sentence-start padding inside contexts; never emitted.
const BOS: TokenId = TokenId(u32::MAX);

/// Add-k smoothed n-gram language model. The source is ignored.
#[derive(Debug, Clone)]
pub struct NgramModel {
    vocab: Vocab,
    order: usize,
    k: f64,
    counts: HashMap<Vec<TokenId>, HashMap<TokenId, u64>>,
}

impl NgramModel {
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], order: usize, k: f64) -> Result<Self, ModelError> {
        if !(1..=5).contains(&order) {
            return Err(ModelError::BadParameter(format!("order {order} outside 1..=5")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(ModelError::BadParameter(format!("add-k constant {k} must be positive")));
        }
        if corpus.iter().all(Vec::is_empty) {
            return Err(ModelError::EmptyCorpus);
        }
        let vocab = Vocab::new(corpus.iter().flatten());
        let mut counts: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
        for sentence in corpus {
            let mut seq = vec![BOS; order - 1];
            seq.extend(vocab.encode(sentence)?);
            seq.push(TokenId::EOS);
            for w in seq.windows(order) {
                let (ctx, next) = w.split_at(order - 1);
                *counts.entry(ctx.to_vec()).or_default().entry(next[0]).or_insert(0) += 1;
            }
        }
        Ok(NgramModel {
            vocab,
            order,
            k,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn context(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        let need = self.order - 1;
        let mut ctx = vec![BOS; need.saturating_sub(prefix.len())];
        ctx.extend_from_slice(&prefix[prefix.len().saturating_sub(need)..]);
        ctx
    }
}

impl SequenceModel for NgramModel {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn step_logprobs(&self, _source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        let v = self.vocab.len();
        let ctx = self.context(prefix);
        let row = self.counts.get(&ctx);
        let total: u64 = row.map_or(0, |r| r.values().sum());
        let denom = total as f64 + self.k * v as f64;
        Ok((0..v)
            .map(|i| {
                let c = row.and_then(|r| r.get(&TokenId(i as u32))).copied().unwrap_or(0);
                ((c as f64 + self.k) / denom).ln()
            })
            .collect())
    }
}
