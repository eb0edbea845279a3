use std::collections::HashMap;

use super::{check_aligned, count_ngrams, MetricError};
use crate::textproc::Sentence;

pub const MAX_ORDER: usize = 4;

/// Corpus-level sufficient statistics for BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped n-gram matches per order (index 0 = unigrams).
    pub matches: [usize; MAX_ORDER],
    /// Hypothesis n-gram totals per order.
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    /// Sum of closest reference lengths.
    pub ref_len: usize,
}

impl BleuStats {
    fn absorb(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// BLEU on a 0-100 scale.
    ///
    /// Orders for which the hypotheses contain no n-grams at all are dropped
    /// from the geometric mean; any remaining order with zero matches gives 0.
    pub fn score(&self) -> f64 {
        let usable = self.totals.iter().take_while(|&&t| t > 0).count();
        if usable == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..usable {
            if self.matches[n] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[n] as f64 / self.totals[n] as f64).ln();
        }
        let bp = brevity_penalty(self.hyp_len, self.ref_len);
        100.0 * bp * (log_sum / usable as f64).exp()
    }
}

pub fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Reference length closest to `hyp_len`, preferring the shorter on ties.
fn closest_ref_len(hyp_len: usize, refs: &[Sentence]) -> usize {
    refs.iter()
        .map(|r| r.tokens.len())
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

pub fn sentence_stats(hyp: &Sentence, refs: &[Sentence]) -> BleuStats {
    let mut st = BleuStats {
        hyp_len: hyp.tokens.len(),
        ref_len: closest_ref_len(hyp.tokens.len(), refs),
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let h = count_ngrams(&hyp.tokens, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in refs {
            for (g, c) in count_ngrams(&r.tokens, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        st.totals[n - 1] = h.values().sum();
        st.matches[n - 1] = h
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
    }
    st
}

pub fn corpus_stats(hyps: &[Sentence], refs: &[Vec<Sentence>]) -> Result<BleuStats, MetricError> {
    check_aligned(hyps.len(), refs.len())?;
    if hyps.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if let Some(i) = refs.iter().position(Vec::is_empty) {
        return Err(MetricError::NoReference(i));
    }
    let per = crate::par::map_indexed(hyps, |i, h| sentence_stats(h, &refs[i]));
    let mut total = BleuStats::default();
    for s in &per {
        total.absorb(s);
    }
    Ok(total)
}

/// Corpus-level BLEU (4-gram, closest-reference brevity penalty, no smoothing).
pub fn bleu(hyps: &[Sentence], refs: &[Vec<Sentence>]) -> Result<f64, MetricError> {
    Ok(corpus_stats(hyps, refs)?.score())
}
