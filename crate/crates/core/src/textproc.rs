//! Deterministic text primitives shared by metrics, control tokens and decoding.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
}

/// A sentence: the raw text as supplied plus its lowercased token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Sentence { raw, tokens }
    }

    /// Builds a sentence from already tokenized text; `raw` becomes the
    /// space-joined tokens.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let raw = tokens
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        Sentence::new(raw)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of Unicode scalar values in the raw text.
    pub fn char_len(&self) -> usize {
        self.raw.chars().count()
    }

    /// Tokens that count as words for readability (contain a letter).
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).filter(|t| is_word(t))
    }
}

impl From<&str> for Sentence {
    fn from(raw: &str) -> Self {
        Sentence::new(raw)
    }
}

/// Splits on whitespace, detaches leading and trailing punctuation as
/// single-character tokens, and lowercases.
///
/// Lowercasing happens before splitting so that re-tokenizing the
/// space-joined output yields the same tokens.
pub fn tokenize(raw: &str) -> Vec<String> {
    let lowered = raw.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars.iter().position(|c| c.is_alphanumeric());
        let Some(start) = start else {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|c| c.is_alphanumeric()).unwrap() + 1;
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

/// Joins tokens with single spaces.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A token is a word when it contains at least one alphabetic character.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count: maximal groups of `aeiouy`, minus one for a
/// lone word-final `e` when another group exists, with a floor of one.
/// Non-word tokens get 0.
pub fn count_syllables(token: &str) -> usize {
    if !is_word(token) {
        return 0;
    }
    let chars: Vec<char> = token.to_lowercase().chars().collect();
    let mut groups = 0;
    let mut in_group = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = chars.len();
    let silent_e = n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]);
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)`; two empty strings are identical.
pub fn lev_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Counts of tokens or space-joined n-grams.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenMultiset {
    counts: HashMap<String, usize>,
}

impl TokenMultiset {
    pub fn get(&self, key: &str) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.counts.contains_key(key)
    }

    pub fn add(&mut self, key: impl Into<String>, n: usize) {
        if n > 0 {
            *self.counts.entry(key.into()).or_insert(0) += n;
        }
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &TokenMultiset) {
        for (k, v) in other.iter() {
            self.add(k, v);
        }
    }
}

impl<S: Into<String>> FromIterator<S> for TokenMultiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut m = TokenMultiset::default();
        for s in iter {
            m.add(s, 1);
        }
        m
    }
}

/// All contiguous n-grams of `tokens`, keyed by their space-joined form.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<TokenMultiset, TextError> {
    if n == 0 {
        return Err(TextError::ZeroOrder);
    }
    Ok(tokens.windows(n).map(detokenize).collect())
}

/// Cosine similarity of unigram count vectors; 0 when either side is empty.
pub fn cosine_bow<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> f64 {
    let ca: TokenMultiset = a.iter().map(|s| s.as_ref()).collect();
    let cb: TokenMultiset = b.iter().map(|s| s.as_ref()).collect();
    cosine_counts(&ca, &cb)
}

pub(crate) fn cosine_counts(a: &TokenMultiset, b: &TokenMultiset) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: usize = a.iter().map(|(k, v)| v * b.get(k)).sum();
    let na: usize = a.iter().map(|(_, v)| v * v).sum();
    let nb: usize = b.iter().map(|(_, v)| v * v).sum();
    cosine_from_parts(dot, na, nb)
}

/// Cosine from an integer dot product and squared norms, clamped into [0, 1].
pub(crate) fn cosine_from_parts(dot: usize, norm_sq_a: usize, norm_sq_b: usize) -> f64 {
    if norm_sq_a == 0 || norm_sq_b == 0 {
        return 0.0;
    }
    if dot * dot == norm_sq_a * norm_sq_b {
        // parallel vectors; avoid 0.999... from the square roots
        return 1.0;
    }
    let c = dot as f64 / ((norm_sq_a as f64).sqrt() * (norm_sq_b as f64).sqrt());
    c.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat."), toks(&["the", "cat", "sat", "."]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Back in 1950 ,"), toks(&["back", "in", "1950", ","]));
        assert_eq!(
            tokenize("(Hello), world!!"),
            toks(&["(", "hello", ")", ",", "world", "!", "!"])
        );
        assert_eq!(tokenize("don't U.S."), toks(&["don't", "u.s", "."]));
    }

    #[test]
    fn syllable_examples() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("simplification"), 5);
        assert_eq!(count_syllables("made"), 1);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("free"), 1);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("hmm"), 1);
        assert_eq!(count_syllables("1950"), 0);
        assert_eq!(count_syllables(","), 0);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("flaw", "flaw"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
    }

    #[test]
    fn lev_similarity_examples() {
        assert!((lev_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(lev_similarity("same", "same"), 1.0);
        assert_eq!(lev_similarity("", "abc"), 0.0);
        assert_eq!(lev_similarity("", ""), 1.0);
    }

    #[test]
    fn ngram_examples() {
        let t = toks(&["a", "b", "a"]);
        let uni = ngrams(&t, 1).unwrap();
        assert_eq!((uni.get("a"), uni.get("b"), uni.len()), (2, 1, 2));
        let bi = ngrams(&t, 2).unwrap();
        assert_eq!((bi.get("a b"), bi.get("b a"), bi.len()), (1, 1, 2));
        assert!(ngrams(&toks(&["a"]), 2).unwrap().is_empty());
        assert_eq!(ngrams(&t, 0), Err(TextError::ZeroOrder));
    }

    #[test]
    fn cosine_examples() {
        let t = toks(&["x", "y", "x"]);
        assert_eq!(cosine_bow(&t, &t), 1.0);
        assert_eq!(cosine_bow(&["a"], &["b"]), 0.0);
        assert!((cosine_bow(&["a", "b"], &["a", "c"]) - 0.5).abs() < 1e-12);
        assert_eq!(cosine_bow::<&str, &str>(&[], &["a"]), 0.0);
    }

    /// Textbook full-matrix DP, kept separate from the two-row implementation.
    fn lev_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let c = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + c);
            }
        }
        d[a.len()][b.len()]
    }

    /// Breadth-first search over single edits; exact for tiny strings.
    fn lev_by_enumeration(a: &str, b: &str, alphabet: &[char]) -> usize {
        use std::collections::{HashSet, VecDeque};
        let target: Vec<char> = b.chars().collect();
        let start: Vec<char> = a.chars().collect();
        let mut seen = HashSet::new();
        let mut q = VecDeque::new();
        let cap = start.len().max(target.len());
        seen.insert(start.clone());
        q.push_back((start, 0));
        while let Some((s, d)) = q.pop_front() {
            if s == target {
                return d;
            }
            let mut next = Vec::new();
            for i in 0..s.len() {
                let mut del = s.clone();
                del.remove(i);
                next.push(del);
                for &c in alphabet {
                    let mut sub = s.clone();
                    sub[i] = c;
                    next.push(sub);
                }
            }
            for i in 0..=s.len() {
                for &c in alphabet {
                    let mut ins = s.clone();
                    ins.insert(i, c);
                    next.push(ins);
                }
            }
            for n in next {
                if n.len() <= cap && seen.insert(n.clone()) {
                    q.push_back((n, d + 1));
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn kitten_sitting_by_enumeration() {
        let alphabet: Vec<char> = "kitensg".chars().collect();
        assert_eq!(lev_by_enumeration("kitten", "sitting", &alphabet), 3);
    }

    proptest! {
        #[test]
        fn levenshtein_matches_oracle_and_is_metric(
            a in "[abc]{0,7}", b in "[abc]{0,7}", c in "[abc]{0,7}"
        ) {
            let dab = levenshtein(&a, &b);
            prop_assert_eq!(dab, lev_oracle(&a, &b));
            prop_assert_eq!(dab, levenshtein(&b, &a));
            prop_assert_eq!(dab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= dab + levenshtein(&b, &c));
        }

        #[test]
        fn levenshtein_matches_enumeration_on_tiny(a in "[ab]{0,3}", b in "[ab]{0,3}") {
            prop_assert_eq!(levenshtein(&a, &b), lev_by_enumeration(&a, &b, &['a', 'b']));
        }

        #[test]
        fn lev_similarity_bounds(a in "[a-d]{0,8}", b in "[a-d]{0,8}") {
            let s = lev_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, a == b);
        }

        #[test]
        fn tokenize_round_trip(raw in "\\PC{0,40}") {
            let t = tokenize(&raw);
            prop_assert!(t.iter().all(|x| !x.is_empty() && !x.chars().any(char::is_whitespace)));
            prop_assert_eq!(tokenize(&detokenize(&t)), t);
        }

        #[test]
        fn ngram_total_count(t in prop::collection::vec("[a-c]", 0..10), n in 1usize..5) {
            let m = ngrams(&t, n).unwrap();
            prop_assert_eq!(m.total(), (t.len() + 1).saturating_sub(n));
        }

        #[test]
        fn cosine_invariances(
            a in prop::collection::vec("[a-d]", 0..8),
            b in prop::collection::vec("[a-d]", 0..8),
            k in 1usize..4,
        ) {
            let c = cosine_bow(&a, &b);
            prop_assert!((0.0..=1.0).contains(&c));
            let mut ra = a.clone();
            ra.reverse();
            prop_assert!((cosine_bow(&ra, &b) - c).abs() < 1e-12);
            let dup = |v: &Vec<String>| v.iter().cycle().take(v.len() * k).cloned().collect::<Vec<_>>();
            prop_assert!((cosine_bow(&dup(&a), &dup(&b)) - c).abs() < 1e-12);
        }
    }
}
