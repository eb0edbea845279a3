use serde::{Deserialize, Serialize};

use crate::control::{leading_controls, parse_control_token};
use crate::metrics::fkgl_formula;
use crate::models::{TokenId, Vocab, EOS};
use crate::textproc::{cosine_from_parts, count_syllables, is_word, TokenMultiset};

/// Coefficients of the length, exact-match and FKGL penalties. Positive
/// values penalize; all zero is plain beam search.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda_length: f64,
    pub lambda_exact: f64,
    pub lambda_fkgl: f64,
}

impl PenaltyConfig {
    pub const VANILLA: PenaltyConfig = PenaltyConfig {
        lambda_length: 0.0,
        lambda_exact: 0.0,
        lambda_fkgl: 0.0,
    };

    pub fn new(lambda_length: f64, lambda_exact: f64, lambda_fkgl: f64) -> Self {
        PenaltyConfig {
            lambda_length,
            lambda_exact,
            lambda_fkgl,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda_length.is_finite() && self.lambda_exact.is_finite() && self.lambda_fkgl.is_finite()
    }

    pub fn is_vanilla(&self) -> bool {
        *self == Self::VANILLA
    }
}

/// Features of a hypothesis that the penalties read, kept as integers so an
/// incremental update and a from-scratch computation agree exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PenaltyFeatures {
    pub length: usize,
    pub words: usize,
    pub syllables: usize,
    pub dot: usize,
    pub norm_sq: usize,
}

impl PenaltyFeatures {
    /// `log(LP * EMP * FKGLP)`.
    pub fn logsum(&self, source_norm_sq: usize, cfg: &PenaltyConfig) -> f64 {
        let mut p = 0.0;
        if cfg.lambda_length != 0.0 {
            p += cfg.lambda_length * self.length as f64;
        }
        if cfg.lambda_exact != 0.0 {
            p += cfg.lambda_exact * cosine_from_parts(self.dot, source_norm_sq, self.norm_sq);
        }
        if cfg.lambda_fkgl != 0.0 && self.words > 0 {
            p += cfg.lambda_fkgl * fkgl_formula(self.words, 1, self.syllables);
        }
        p
    }
}

/// Source side of the exact-match penalty: content-token counts after any
/// control prefix.
#[derive(Debug, Clone)]
pub struct SourceProfile {
    counts: TokenMultiset,
    pub norm_sq: usize,
}

impl SourceProfile {
    pub fn new<S: AsRef<str>>(source: &[S]) -> Self {
        let (_, skip) = leading_controls(source);
        let counts: TokenMultiset = source[skip..].iter().map(|t| t.as_ref()).collect();
        let norm_sq = counts.iter().map(|(_, c)| c * c).sum();
        SourceProfile { counts, norm_sq }
    }

    pub fn count(&self, token: &str) -> usize {
        self.counts.get(token)
    }
}

fn counts_toward_length(token: &str) -> bool {
    token != EOS && parse_control_token(token).is_err()
}

/// Per-vocabulary-entry contributions, precomputed once per source.
pub(crate) struct TokenTable {
    entries: Vec<Entry>,
}

#[derive(Clone, Copy)]
struct Entry {
    counted: bool,
    word: bool,
    syllables: usize,
    src_count: usize,
}

impl TokenTable {
    pub fn new(vocab: &Vocab, profile: &SourceProfile) -> Self {
        let entries = vocab
            .tokens()
            .iter()
            .map(|t| {
                let counted = counts_toward_length(t);
                Entry {
                    counted,
                    word: counted && is_word(t),
                    syllables: if counted { count_syllables(t) } else { 0 },
                    src_count: if counted { profile.count(t) } else { 0 },
                }
            })
            .collect();
        TokenTable { entries }
    }

    /// Features after appending `next` to a prefix with features `f`;
    /// `prior` is how often `next` already occurs in the prefix.
    pub fn extend(&self, f: &PenaltyFeatures, next: TokenId, prior: usize) -> PenaltyFeatures {
        let e = self.entries[next.index()];
        if !e.counted {
            return *f;
        }
        PenaltyFeatures {
            length: f.length + 1,
            words: f.words + usize::from(e.word),
            syllables: f.syllables + e.syllables,
            dot: f.dot + e.src_count,
            norm_sq: f.norm_sq + 2 * prior + 1,
        }
    }
}

/// Features of a whole token list, computed from scratch.
pub fn features<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], source: &[T]) -> PenaltyFeatures {
    let profile = SourceProfile::new(source);
    let kept: Vec<&str> = hyp
        .iter()
        .map(|t| t.as_ref())
        .filter(|t| counts_toward_length(t))
        .collect();
    let counts: TokenMultiset = kept.iter().copied().collect();
    let words: Vec<&&str> = kept.iter().filter(|t| is_word(t)).collect();
    PenaltyFeatures {
        length: kept.len(),
        words: words.len(),
        syllables: words.iter().map(|w| count_syllables(w)).sum(),
        dot: counts.iter().map(|(k, c)| c * profile.count(k)).sum(),
        norm_sq: counts.iter().map(|(_, c)| c * c).sum(),
    }
}

/// `λ_length·len + λ_exact·cos(source, hyp) + λ_fkgl·FKGL(hyp)`: the log of
/// the product of the three exponential penalties.
///
/// End-of-sequence and control tokens are not counted; a hypothesis without
/// words contributes nothing to the FKGL term.
pub fn penalty_logsum<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], source: &[T], cfg: &PenaltyConfig) -> f64 {
    let profile = SourceProfile::new(source);
    features(hyp, source).logsum(profile.norm_sq, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn vanilla_is_zero() {
        assert_eq!(penalty_logsum(&t("a b c"), &t("x y"), &PenaltyConfig::VANILLA), 0.0);
    }

    #[test]
    fn copy_gets_full_exact_penalty() {
        let src = t("the cat sat on the mat .");
        let cfg = PenaltyConfig::new(0.0, 0.7, 0.0);
        assert_eq!(penalty_logsum(&src, &src, &cfg), 0.7);
        let prefixed = t("<NbChars_1.00> <LevSim_0.50> the cat sat on the mat .");
        assert_eq!(penalty_logsum(&src, &prefixed, &cfg), 0.7);
    }

    #[test]
    fn length_and_fkgl() {
        let cfg = PenaltyConfig::new(0.1, 0.0, 0.4);
        let v = penalty_logsum(&t("the cat sat . </s>"), &t("x"), &cfg);
        assert!((v - (-0.648)).abs() < 1e-12, "{v}");
        // no words: only the length term
        let v = penalty_logsum(&t(", ."), &t("x"), &cfg);
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn incremental_matches_scratch() {
        let src = t("a cat and a dog saw a cat .");
        let hyp = t("a cat saw a dog and a bird . </s>");
        let vocab = Vocab::new(hyp.iter().chain(src.iter()));
        let profile = SourceProfile::new(&src);
        let table = TokenTable::new(&vocab, &profile);
        let mut f = PenaltyFeatures::default();
        for (i, tok) in hyp.iter().enumerate() {
            let prior = hyp[..i].iter().filter(|x| *x == tok).count();
            f = table.extend(&f, vocab.id(tok).unwrap(), prior);
        }
        assert_eq!(f, features(&hyp, &src));
    }
}
