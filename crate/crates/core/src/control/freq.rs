use std::collections::HashMap;

use super::ControlError;
use crate::textproc::Sentence;

/// How the second column of a frequency file should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreqFormat {
    /// Ranks when the values are exactly 1..=N with no repeats, counts otherwise.
    #[default]
    Auto,
    Rank,
    Count,
}

/// Word to frequency rank (1 = most frequent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    ranks: HashMap<String, u32>,
    max_rank: u32,
    pub source: String,
}

impl FrequencyTable {
    /// Builds a table from words listed most-frequent first.
    pub fn from_ordered<I, S>(words: I, source: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ranks = HashMap::new();
        for w in words {
            let w = w.as_ref().to_lowercase();
            let next = ranks.len() as u32 + 1;
            ranks.entry(w).or_insert(next);
        }
        FrequencyTable {
            max_rank: ranks.len() as u32,
            ranks,
            source: source.into(),
        }
    }

    /// Ranks by descending count, ties broken lexicographically.
    pub fn from_counts<I, S>(counts: I, source: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (w, c) in counts {
            *merged.entry(w.as_ref().to_lowercase()).or_insert(0) += c;
        }
        let mut v: Vec<(String, u64)> = merged.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(v.into_iter().map(|(w, _)| w), source)
    }

    /// Counts tokens over a corpus.
    pub fn from_corpus(sentences: &[Sentence], source: impl Into<String>) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for t in &s.tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        Self::from_counts(counts, source)
    }

    /// Parses `word<TAB>rank` or `word<TAB>count` lines. Blank lines are skipped.
    pub fn parse(text: &str, format: FreqFormat, source: impl Into<String>) -> Result<Self, ControlError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || ControlError::FreqLine {
                line: i + 1,
                content: line.to_string(),
            };
            let (word, value) = line.split_once('\t').ok_or_else(bad)?;
            let value: u64 = value.trim().parse().map_err(|_| bad())?;
            if word.is_empty() {
                return Err(bad());
            }
            rows.push((word.to_string(), value));
        }
        let as_ranks = match format {
            FreqFormat::Rank => true,
            FreqFormat::Count => false,
            FreqFormat::Auto => {
                let mut vals: Vec<u64> = rows.iter().map(|r| r.1).collect();
                vals.sort_unstable();
                vals.iter().enumerate().all(|(i, &v)| v == i as u64 + 1)
            }
        };
        if as_ranks {
            if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.1 == 0) {
                return Err(ControlError::FreqLine {
                    line: i + 1,
                    content: rows[i].0.clone(),
                });
            }
            let mut ranks: HashMap<String, u32> = HashMap::new();
            for (i, (word, value)) in rows.into_iter().enumerate() {
                let rank = u32::try_from(value).map_err(|_| ControlError::FreqLine {
                    line: i + 1,
                    content: word.clone(),
                })?;
                let e = ranks.entry(word.to_lowercase()).or_insert(rank);
                *e = (*e).min(rank);
            }
            Ok(FrequencyTable {
                max_rank: ranks.values().copied().max().unwrap_or(0),
                ranks,
                source: source.into(),
            })
        } else {
            Ok(Self::from_counts(rows, source))
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.ranks.get(word).copied()
    }

    /// Rank of `word`, with out-of-vocabulary words ranked one past the
    /// largest rank in the table.
    pub fn rank(&self, word: &str) -> u32 {
        self.get(word).unwrap_or(self.max_rank.saturating_add(1))
    }
}

/// Linear-interpolation quantile of unsorted values.
pub(crate) fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
}

fn rank_statistic(sentence: &Sentence, table: &FrequencyTable) -> Result<f64, ControlError> {
    if sentence.is_empty() {
        return Err(ControlError::EmptySentence);
    }
    let content: Vec<&String> = sentence
        .tokens
        .iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect();
    let pool: Vec<&String> = if content.is_empty() {
        sentence.tokens.iter().collect()
    } else {
        content
    };
    let mut logs: Vec<f64> = pool
        .iter()
        .map(|t| (1.0 + f64::from(table.rank(t))).ln())
        .collect();
    Ok(quantile(&mut logs, 0.75))
}

/// Third quartile of `ln(1 + rank)` over the target's words divided by the
/// same statistic over the source's words. Punctuation-only tokens are
/// ignored unless a sentence has nothing else.
pub fn word_rank_ratio(
    source: &Sentence,
    target: &Sentence,
    table: &FrequencyTable,
) -> Result<f64, ControlError> {
    Ok(rank_statistic(target, table)? / rank_statistic(source, table)?)
}
