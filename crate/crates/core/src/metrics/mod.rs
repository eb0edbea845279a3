//! Simplification metrics: BLEU, SARI, FKGL, exact matches, added and
//! deleted word proportions, and corpus statistics.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{count_syllables, Sentence};

pub mod bleu;
pub mod sari;

pub use bleu::bleu;
pub use sari::sari;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("misaligned inputs: {left} vs {right} sentences")]
    Misaligned { left: usize, right: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("sentence {0} has no reference")]
    NoReference(usize),
    #[error("no words to measure readability on")]
    NoWords,
    #[error("sentence {0}: empty source")]
    EmptySource(usize),
}

pub(crate) fn check_aligned(left: usize, right: usize) -> Result<(), MetricError> {
    if left == right {
        Ok(())
    } else {
        Err(MetricError::Misaligned { left, right })
    }
}

/// Mean of per-sentence values, summed in sorted order so the result does
/// not depend on corpus order.
pub(crate) fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn count_ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Word and syllable totals over a set of sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadabilityCounts {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
}

impl ReadabilityCounts {
    pub fn of(sentence: &Sentence) -> Self {
        let mut c = ReadabilityCounts {
            sentences: 1,
            ..Default::default()
        };
        for w in sentence.words() {
            c.words += 1;
            c.syllables += count_syllables(w);
        }
        c
    }

    pub fn fkgl(&self) -> Result<f64, MetricError> {
        if self.words == 0 || self.sentences == 0 {
            return Err(MetricError::NoWords);
        }
        Ok(fkgl_formula(self.words, self.sentences, self.syllables))
    }
}

pub fn fkgl_formula(words: usize, sentences: usize, syllables: usize) -> f64 {
    0.39 * (words as f64 / sentences as f64) + 11.8 * (syllables as f64 / words as f64) - 15.59
}

/// Flesch-Kincaid grade level of the sentences read as one document.
///
/// Only tokens containing a letter are words; the result is not clamped.
pub fn fkgl(sentences: &[Sentence]) -> Result<f64, MetricError> {
    let per = crate::par::map(sentences, ReadabilityCounts::of);
    let mut total = ReadabilityCounts::default();
    for c in per {
        total.sentences += c.sentences;
        total.words += c.words;
        total.syllables += c.syllables;
    }
    total.fkgl()
}

/// Fraction of pairs whose token lists are identical.
pub fn exact_match_ratio(sources: &[Sentence], hyps: &[Sentence]) -> Result<f64, MetricError> {
    check_aligned(sources.len(), hyps.len())?;
    if sources.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let same = sources
        .iter()
        .zip(hyps)
        .filter(|(s, h)| s.tokens == h.tokens)
        .count();
    Ok(same as f64 / sources.len() as f64)
}

/// Per-sentence proportions of added and deleted token types.
pub fn added_deleted(source: &Sentence, hyp: &Sentence) -> (f64, f64) {
    let src: HashSet<&str> = source.tokens.iter().map(String::as_str).collect();
    let out: HashSet<&str> = hyp.tokens.iter().map(String::as_str).collect();
    if out.is_empty() {
        return (0.0, if src.is_empty() { 0.0 } else { 1.0 });
    }
    let add = out.difference(&src).count() as f64 / out.len() as f64;
    let del = if src.is_empty() {
        0.0
    } else {
        src.difference(&out).count() as f64 / src.len() as f64
    };
    (add, del)
}

/// Macro-averaged added and deleted type proportions.
pub fn added_deleted_proportions(
    sources: &[Sentence],
    hyps: &[Sentence],
) -> Result<(f64, f64), MetricError> {
    check_aligned(sources.len(), hyps.len())?;
    if sources.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let per = crate::par::map_indexed(sources, |i, s| added_deleted(s, &hyps[i]));
    let add = order_free_mean(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let del = order_free_mean(&per.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok((add, del))
}

/// Character length of `target` over character length of `source`.
pub fn compression_ratio(source: &Sentence, target: &Sentence) -> Result<f64, MetricError> {
    let s = source.char_len();
    if s == 0 {
        return Err(MetricError::EmptySource(0));
    }
    Ok(target.char_len() as f64 / s as f64)
}

/// One row of a system comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu: f64,
    pub sari: f64,
    pub fkgl: f64,
    #[serde(rename = "match")]
    pub exact_match: f64,
    pub add: f64,
    pub del: f64,
    pub n_sentences: usize,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "bleu\tsari\tfkgl\tmatch\tadd\tdel\tn_sentences";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.bleu, self.sari, self.fkgl, self.exact_match, self.add, self.del, self.n_sentences
        )
    }
}

/// Computes every metric for one system output.
pub fn evaluate(
    sources: &[Sentence],
    hyps: &[Sentence],
    refs: &[Vec<Sentence>],
) -> Result<EvalReport, MetricError> {
    check_aligned(sources.len(), hyps.len())?;
    check_aligned(sources.len(), refs.len())?;
    let (add, del) = added_deleted_proportions(sources, hyps)?;
    Ok(EvalReport {
        bleu: bleu(hyps, refs)?,
        sari: sari(sources, hyps, refs)?,
        fkgl: fkgl(hyps)?,
        exact_match: exact_match_ratio(sources, hyps)?,
        add,
        del,
        n_sentences: sources.len(),
    })
}

/// Statistics for one side of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub n_sentences: usize,
    pub n_tokens: usize,
    pub vocab_size: usize,
    pub fkgl: f64,
}

impl SideStats {
    pub fn of(sentences: &[Sentence]) -> Result<Self, MetricError> {
        if sentences.is_empty() {
            return Err(MetricError::EmptyCorpus);
        }
        let vocab: HashSet<&str> = sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        Ok(SideStats {
            n_sentences: sentences.len(),
            n_tokens: sentences.iter().map(|s| s.tokens.len()).sum(),
            vocab_size: vocab.len(),
            fkgl: fkgl(sentences)?,
        })
    }
}

/// Source/target corpus description: sizes, vocabularies, compression, FKGL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub source: SideStats,
    pub target: Option<SideStats>,
    /// Mean over pairs of target/source character ratio.
    pub mean_compression: Option<f64>,
}

impl CorpusStats {
    pub fn of(sources: &[Sentence], targets: Option<&[Sentence]>) -> Result<Self, MetricError> {
        let source = SideStats::of(sources)?;
        let (target, mean_compression) = match targets {
            None => (None, None),
            Some(t) => {
                check_aligned(sources.len(), t.len())?;
                let ratios = crate::par::map_indexed(sources, |i, s| {
                    compression_ratio(s, &t[i]).map_err(|_| MetricError::EmptySource(i))
                });
                let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_, _>>()?;
                let mean = order_free_mean(&ratios);
                (Some(SideStats::of(t)?), Some(mean))
            }
        };
        Ok(CorpusStats {
            source,
            target,
            mean_compression,
        })
    }
}
