//! Control tokens and back-translation data.
//!
//! A control sequence describes a target sentence relative to the text the
//! model reads: character-length ratio, Levenshtein similarity, word-rank
//! ratio and (optionally) dependency-depth ratio, each bucketed to 0.05 and
//! rendered as `<Name_x.xx>`. Ratios are measured on the normalized text
//! (lowercased tokens joined by single spaces).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelError, SequenceModel, TokenId};
use crate::textproc::{detokenize, lev_similarity, Sentence};

mod bucket;
mod freq;
mod noise;

pub use bucket::{bucketize, Bucket};
pub use freq::{word_rank_ratio, FreqFormat, FrequencyTable};
pub use noise::{noise, NoiseConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("empty sentence")]
    EmptySentence,
    #[error("malformed control token {0:?}")]
    BadToken(String),
    #[error("expected control token {expected} but found {found:?}")]
    OutOfOrder { expected: &'static str, found: String },
    #[error("expected 3 or 4 control tokens, found {0}")]
    WrongCount(usize),
    #[error("no dependency depth for sentence {0:?}")]
    DepthLookup(String),
    #[error("translation is empty")]
    EmptyTranslation,
    #[error("drop probability {0} outside [0, 1)")]
    BadNoise(f64),
    #[error("frequency table line {line}: {content:?}")]
    FreqLine { line: usize, content: String },
    #[error("depth sidecar line {line}: {content:?}")]
    DepthLine { line: usize, content: String },
    #[error("malformed example line {0:?}")]
    BadExample(String),
    #[error("no examples")]
    NoExamples,
    #[error("sentence {index}: {error}")]
    AtSentence { index: usize, error: Box<ControlError> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlKind {
    NbChars,
    LevSim,
    WordRank,
    DepTreeDepth,
}

impl ControlKind {
    pub const ORDER: [ControlKind; 4] = [
        ControlKind::NbChars,
        ControlKind::LevSim,
        ControlKind::WordRank,
        ControlKind::DepTreeDepth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlKind::NbChars => "NbChars",
            ControlKind::LevSim => "LevSim",
            ControlKind::WordRank => "WordRank",
            ControlKind::DepTreeDepth => "DepthTreeDepth",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ORDER.into_iter().find(|k| k.name() == name)
    }

    pub fn render(self, value: Bucket) -> String {
        format!("<{}_{}>", self.name(), value)
    }
}

/// Parses one `<Name_value>` token.
pub fn parse_control_token(token: &str) -> Result<(ControlKind, Bucket), ControlError> {
    let bad = || ControlError::BadToken(token.to_string());
    let inner = token
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .ok_or_else(bad)?;
    let (name, value) = inner.rsplit_once('_').ok_or_else(bad)?;
    let kind = ControlKind::from_name(name).ok_or_else(bad)?;
    let value = Bucket::parse_value(value).ok_or_else(bad)?;
    Ok((kind, value))
}

/// Leading well-formed control tokens of any kind, and how many were read.
pub fn leading_controls<S: AsRef<str>>(tokens: &[S]) -> (Vec<(ControlKind, Bucket)>, usize) {
    let found: Vec<_> = tokens
        .iter()
        .map_while(|t| parse_control_token(t.as_ref()).ok())
        .collect();
    let n = found.len();
    (found, n)
}

/// The bucketed control sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlTokens {
    pub nb_chars: Bucket,
    pub lev_sim: Bucket,
    pub word_rank: Bucket,
    pub dep_depth: Option<Bucket>,
}

impl ControlTokens {
    pub const IDENTITY: ControlTokens = ControlTokens {
        nb_chars: Bucket::ONE,
        lev_sim: Bucket::ONE,
        word_rank: Bucket::ONE,
        dep_depth: None,
    };

    pub fn render(&self) -> Vec<String> {
        let mut out = vec![
            ControlKind::NbChars.render(self.nb_chars),
            ControlKind::LevSim.render(self.lev_sim),
            ControlKind::WordRank.render(self.word_rank),
        ];
        if let Some(d) = self.dep_depth {
            out.push(ControlKind::DepTreeDepth.render(d));
        }
        out
    }

    /// Parses exactly three or four tokens in rendering order.
    pub fn parse<S: AsRef<str>>(tokens: &[S]) -> Result<Self, ControlError> {
        if !(3..=4).contains(&tokens.len()) {
            return Err(ControlError::WrongCount(tokens.len()));
        }
        let mut values = [Bucket::ONE; 4];
        for (i, t) in tokens.iter().enumerate() {
            let t = t.as_ref();
            let (kind, v) = parse_control_token(t)?;
            let expected = ControlKind::ORDER[i];
            if kind != expected {
                return Err(ControlError::OutOfOrder {
                    expected: expected.name(),
                    found: t.to_string(),
                });
            }
            values[i] = v;
        }
        Ok(ControlTokens {
            nb_chars: values[0],
            lev_sim: values[1],
            word_rank: values[2],
            dep_depth: (tokens.len() == 4).then_some(values[3]),
        })
    }

    /// Splits a control prefix off a token sequence.
    pub fn split_prefix<S: AsRef<str>>(tokens: &[S]) -> Result<(Self, &[S]), ControlError> {
        let n = tokens
            .iter()
            .take(4)
            .take_while(|t| {
                let t = t.as_ref();
                t.starts_with('<') && t.ends_with('>') && t.contains('_')
            })
            .count();
        Ok((Self::parse(&tokens[..n])?, &tokens[n..]))
    }
}

impl fmt::Display for ControlTokens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render().join(" "))
    }
}

/// Source of dependency-tree depths.
pub trait DepthProvider: Sync {
    fn depth(&self, sentence: &Sentence) -> Option<u32>;
}

impl<F: Fn(&Sentence) -> Option<u32> + Sync> DepthProvider for F {
    fn depth(&self, sentence: &Sentence) -> Option<u32> {
        self(sentence)
    }
}

/// Depths read from a `line_number<TAB>depth` sidecar, keyed by the
/// normalized text of the corresponding corpus line.
#[derive(Debug, Clone, Default)]
pub struct SidecarDepths {
    by_text: HashMap<String, u32>,
}

impl SidecarDepths {
    /// `corpus` is the file the sidecar annotates; line numbers are 1-based.
    pub fn parse(sidecar: &str, corpus: &[Sentence]) -> Result<Self, ControlError> {
        let mut by_text = HashMap::new();
        for (i, line) in sidecar.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || ControlError::DepthLine {
                line: i + 1,
                content: line.to_string(),
            };
            let (no, depth) = line.split_once('\t').ok_or_else(bad)?;
            let no: usize = no.trim().parse().map_err(|_| bad())?;
            let depth: u32 = depth.trim().parse().map_err(|_| bad())?;
            let s = no.checked_sub(1).and_then(|k| corpus.get(k)).ok_or_else(bad)?;
            by_text.insert(normalized(s), depth);
        }
        Ok(SidecarDepths { by_text })
    }

    /// Adds another annotated corpus.
    pub fn extend(&mut self, other: SidecarDepths) {
        self.by_text.extend(other.by_text);
    }
}

impl DepthProvider for SidecarDepths {
    fn depth(&self, sentence: &Sentence) -> Option<u32> {
        self.by_text.get(&normalized(sentence)).copied()
    }
}

fn normalized(s: &Sentence) -> String {
    detokenize(&s.tokens)
}

/// Control tokens describing `target` relative to `source`.
///
/// Depth ratios treat depths below 1 as 1.
pub fn control_tokens(
    source: &Sentence,
    target: &Sentence,
    table: &FrequencyTable,
    depths: Option<&dyn DepthProvider>,
) -> Result<ControlTokens, ControlError> {
    if source.is_empty() || target.is_empty() {
        return Err(ControlError::EmptySentence);
    }
    let (src, tgt) = (normalized(source), normalized(target));
    let chars = |s: &str| s.chars().count() as f64;
    let nb_chars = bucketize(chars(&tgt) / chars(&src))?;
    let lev_sim = bucketize(lev_similarity(&src, &tgt).max(f64::MIN_POSITIVE))?;
    let word_rank = bucketize(word_rank_ratio(source, target, table)?)?;
    let dep_depth = match depths {
        None => None,
        Some(p) => {
            let lookup = |s: &Sentence| p.depth(s).ok_or_else(|| ControlError::DepthLookup(s.raw.clone()));
            let (ds, dt) = (lookup(source)?.max(1), lookup(target)?.max(1));
            Some(bucketize(f64::from(dt) / f64::from(ds))?)
        }
    };
    Ok(ControlTokens {
        nb_chars,
        lev_sim,
        word_rank,
        dep_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ComplexToSimple,
    SimpleToComplex,
}

/// `controls ⌢ translation -> original`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BtExample {
    pub input: Vec<String>,
    pub target: Vec<String>,
    pub direction: Direction,
}

impl BtExample {
    pub fn controls(&self) -> Result<ControlTokens, ControlError> {
        Ok(ControlTokens::split_prefix(&self.input)?.0)
    }

    /// The translated text without its control prefix.
    pub fn translation(&self) -> Result<&[String], ControlError> {
        Ok(ControlTokens::split_prefix(&self.input)?.1)
    }

    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{}", self.input.join(" "), self.target.join(" "))
    }

    pub fn from_tsv_line(line: &str, direction: Direction) -> Result<Self, ControlError> {
        let (input, target) = line
            .split_once('\t')
            .ok_or_else(|| ControlError::BadExample(line.to_string()))?;
        let split = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
        let ex = BtExample {
            input: split(input),
            target: split(target),
            direction,
        };
        ex.controls()?;
        Ok(ex)
    }
}

/// Builds one back-translation example from an original sentence.
pub fn make_bt_example<F>(
    original: &Sentence,
    translator: F,
    table: &FrequencyTable,
    depths: Option<&dyn DepthProvider>,
    direction: Direction,
) -> Result<BtExample, ControlError>
where
    F: FnOnce(&Sentence) -> Sentence,
{
    let translated = translator(original);
    if translated.is_empty() {
        return Err(ControlError::EmptyTranslation);
    }
    let controls = control_tokens(&translated, original, table, depths)?;
    let mut input = controls.render();
    input.extend(translated.tokens.iter().cloned());
    Ok(BtExample {
        input,
        target: original.tokens.clone(),
        direction,
    })
}

/// Noises every sentence (seed `seed + index`) and builds its example.
pub fn prepare_bt_corpus(
    sentences: &[Sentence],
    config: NoiseConfig,
    seed: u64,
    table: &FrequencyTable,
    direction: Direction,
) -> Result<Vec<BtExample>, ControlError> {
    let results = crate::par::map_indexed(sentences, |i, s| {
        let translate = |y: &Sentence| Sentence::from_tokens(&noise(&y.tokens, config, seed.wrapping_add(i as u64)));
        make_bt_example(s, translate, table, None, direction).map_err(|e| ControlError::AtSentence {
            index: i,
            error: Box::new(e),
        })
    });
    results.into_iter().collect()
}

/// Negative log-likelihood of the back-translation objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Finite(f64),
    /// Some example's target has probability zero.
    Infinite { example: usize },
}

impl Loss {
    pub fn value(self) -> f64 {
        match self {
            Loss::Finite(v) => v,
            Loss::Infinite { .. } => f64::INFINITY,
        }
    }
}

/// `-log P(target </s> | source)`, or `None` when the probability is zero.
pub fn sequence_nll<M: SequenceModel + ?Sized, S: AsRef<str>>(
    model: &M,
    source: &[String],
    target: &[S],
) -> Result<Option<f64>, ControlError> {
    let mut ids = model.vocab().encode(target)?;
    ids.push(TokenId::EOS);
    let mut nll = 0.0;
    for t in 0..ids.len() {
        let lp = model.next_logprobs(source, &ids[..t])?[ids[t].index()];
        if lp == f64::NEG_INFINITY {
            return Ok(None);
        }
        nll -= lp;
    }
    Ok(Some(nll))
}

/// Mean over examples of `-log P(target | input)`.
pub fn bt_loss<M: SequenceModel + ?Sized>(model: &M, examples: &[BtExample]) -> Result<Loss, ControlError> {
    if examples.is_empty() {
        return Err(ControlError::NoExamples);
    }
    let per = crate::par::map(examples, |ex| sequence_nll(model, &ex.input, &ex.target));
    let mut sum = 0.0;
    for (i, r) in per.into_iter().enumerate() {
        match r? {
            Some(v) => sum += v,
            None => return Ok(Loss::Infinite { example: i }),
        }
    }
    Ok(Loss::Finite(sum / examples.len() as f64))
}

/// Both directions of the objective: complex-to-simple plus simple-to-complex.
pub fn bt_objective<A, B>(
    to_simple: &A,
    simple_examples: &[BtExample],
    to_complex: &B,
    complex_examples: &[BtExample],
) -> Result<Loss, ControlError>
where
    A: SequenceModel + ?Sized,
    B: SequenceModel + ?Sized,
{
    let a = bt_loss(to_simple, simple_examples)?;
    let b = bt_loss(to_complex, complex_examples)?;
    Ok(match (a, b) {
        (Loss::Finite(x), Loss::Finite(y)) => Loss::Finite(x + y),
        (Loss::Infinite { example }, _) | (_, Loss::Infinite { example }) => Loss::Infinite { example },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{NoisyCopyModel, NoisyCopyParams, TableModel, EOS};
    use proptest::prelude::*;

    const INPUT: &str = "Back in 1950 , Eiji Toyoda visited a Ford plant to learn how Americans made cars .";
    const REFERENCE: &str = "He visited a Ford factory back in 1950 to learn how Americans made cars .";

    fn table() -> FrequencyTable {
        FrequencyTable::from_ordered(
            ["the", ",", ".", "a", "in", "to", "he", "how", "made", "back", "learn", "visited", "cars"],
            "toy",
        )
    }

    #[test]
    fn identity_pair_is_all_ones() {
        let s = Sentence::new(INPUT);
        let c = control_tokens(&s, &s, &table(), None).unwrap();
        assert_eq!(c, ControlTokens::IDENTITY);
        assert_eq!(
            c.render(),
            vec!["<NbChars_1.00>", "<LevSim_1.00>", "<WordRank_1.00>"]
        );
    }

    #[test]
    fn table3_character_ratio() {
        let (a, b) = (Sentence::new(INPUT), Sentence::new(REFERENCE));
        let c = control_tokens(&a, &b, &table(), None).unwrap();
        assert_eq!(c.nb_chars, bucketize(73.0 / 82.0).unwrap());
        assert_eq!(c.nb_chars.to_string(), "0.90");
        let lev = lev_similarity(&detokenize(&a.tokens), &detokenize(&b.tokens));
        assert_eq!(c.lev_sim, bucketize(lev).unwrap());
    }

    #[test]
    fn half_the_characters() {
        let c = control_tokens(&Sentence::new("abcdefgh"), &Sentence::new("abcd"), &table(), None).unwrap();
        assert_eq!(c.nb_chars.to_string(), "0.50");
    }

    #[test]
    fn depth_tokens() {
        let corpus = vec![Sentence::new("a b c"), Sentence::new("a b")];
        let depths = SidecarDepths::parse("1\t4\n2\t3\n", &corpus).unwrap();
        let c = control_tokens(&corpus[0], &corpus[1], &table(), Some(&depths)).unwrap();
        assert_eq!(c.dep_depth.unwrap().to_string(), "0.75");
        assert_eq!(c.render()[3], "<DepthTreeDepth_0.75>");
        let e = control_tokens(&corpus[0], &Sentence::new("x"), &table(), Some(&depths));
        assert!(matches!(e, Err(ControlError::DepthLookup(_))));
        assert!(SidecarDepths::parse("9\t1\n", &corpus).is_err());
        assert!(SidecarDepths::parse("1 2\n", &corpus).is_err());
    }

    #[test]
    fn render_parse_examples() {
        let c = ControlTokens {
            nb_chars: Bucket::ONE,
            lev_sim: bucketize(0.75).unwrap(),
            word_rank: bucketize(0.75).unwrap(),
            dep_depth: None,
        };
        let r = c.render();
        assert_eq!(r, vec!["<NbChars_1.00>", "<LevSim_0.75>", "<WordRank_0.75>"]);
        assert_eq!(ControlTokens::parse(&r).unwrap(), c);
        assert_eq!(
            parse_control_token("<NbChars_0.33>"),
            Err(ControlError::BadToken("<NbChars_0.33>".into()))
        );
        assert!(matches!(
            ControlTokens::parse(&["<NbChars_0.33>", "<LevSim_1.00>", "<WordRank_1.00>"]),
            Err(ControlError::BadToken(t)) if t == "<NbChars_0.33>"
        ));
        assert!(matches!(
            ControlTokens::parse(&["<LevSim_1.00>", "<NbChars_1.00>", "<WordRank_1.00>"]),
            Err(ControlError::OutOfOrder { .. })
        ));
        assert_eq!(
            ControlTokens::parse(&["<NbChars_1.00>"]),
            Err(ControlError::WrongCount(1))
        );
    }

    #[test]
    fn leading_controls_is_lenient() {
        let t = ["<LevSim_0.25>", "<NbChars_1.0>", "word", "<LevSim_0.50>"];
        let (found, n) = leading_controls(&t);
        assert_eq!(n, 2);
        assert_eq!(found[0].0, ControlKind::LevSim);
        assert_eq!(found[1].1, Bucket::ONE);
    }

    #[test]
    fn identity_translator_example() {
        let y = Sentence::new("The cat sat on the mat .");
        let ex = make_bt_example(&y, |s| s.clone(), &table(), None, Direction::ComplexToSimple).unwrap();
        let mut expected: Vec<String> = ControlTokens::IDENTITY.render();
        expected.extend(y.tokens.iter().cloned());
        assert_eq!(ex.input, expected);
        assert_eq!(ex.target, y.tokens);
        assert_eq!(ex.translation().unwrap(), &y.tokens[..]);
        let e = make_bt_example(&y, |_| Sentence::new(""), &table(), None, Direction::ComplexToSimple);
        assert_eq!(e, Err(ControlError::EmptyTranslation));
    }

    #[test]
    fn noised_example_regression() {
        let y = Sentence::new("In 1950 , Eiji Toyoda visited a Ford factory to learn how Americans made cars .");
        let cfg = NoiseConfig::new(0.2, 2).unwrap();
        let ex = prepare_bt_corpus(std::slice::from_ref(&y), cfg, 7, &table(), Direction::ComplexToSimple)
            .unwrap()
            .remove(0);
        let again = prepare_bt_corpus(std::slice::from_ref(&y), cfg, 7, &table(), Direction::ComplexToSimple)
            .unwrap()
            .remove(0);
        assert_eq!(ex, again);
        assert_eq!(ex.target, y.tokens);
        assert_eq!(ex.to_tsv_line(), FROZEN_NOISED_EXAMPLE);
        let back = BtExample::from_tsv_line(&ex.to_tsv_line(), Direction::ComplexToSimple).unwrap();
        assert_eq!(back, ex);
    }

    const FROZEN_NOISED_EXAMPLE: &str = "<NbChars_1.15> <LevSim_0.60> <WordRank_1.00> , eiji toyoda visited ford to learn factory how americans cars . made\tin 1950 , eiji toyoda visited a ford factory to learn how americans made cars .";

    #[test]
    fn copy_model_loss_is_zero() {
        let ys: Vec<Sentence> = ["the cat sat .", "a dog ran home .", "in 1950 , he visited ."]
            .iter()
            .map(|s| Sentence::new(*s))
            .collect();
        let examples = prepare_bt_corpus(&ys, NoiseConfig::IDENTITY, 0, &table(), Direction::ComplexToSimple).unwrap();
        let model = NoisyCopyModel::new(NoisyCopyParams::copy_only(), ys.iter().flat_map(|s| s.tokens.clone())).unwrap();
        assert_eq!(bt_loss(&model, &examples).unwrap(), Loss::Finite(0.0));
        let obj = bt_objective(&model, &examples, &model, &examples).unwrap();
        assert_eq!(obj, Loss::Finite(0.0));
    }

    #[test]
    fn uniform_model_loss() {
        let ys = vec![Sentence::new("a b c"), Sentence::new("b c")];
        let examples = prepare_bt_corpus(&ys, NoiseConfig::IDENTITY, 0, &table(), Direction::SimpleToComplex).unwrap();
        let model = TableModel::new(["a", "b", "c"]);
        let v = model.vocab().len() as f64;
        let expected = (4.0 * v.ln() + 3.0 * v.ln()) / 2.0;
        assert!((bt_loss(&model, &examples).unwrap().value() - expected).abs() < 1e-12);
    }

    #[test]
    fn table_model_loss_hand_sum() {
        let mut m = TableModel::new(["a", "b"]);
        let none: Option<&[&str]> = None;
        m.set_state(none, &[], &[("a", 0.5), ("b", 0.25), (EOS, 0.25)]).unwrap();
        m.set_state(none, &["a"], &[("b", 0.8), (EOS, 0.2)]).unwrap();
        m.set_state(none, &["a", "b"], &[(EOS, 1.0)]).unwrap();
        m.set_state(none, &["b"], &[("a", 0.1), (EOS, 0.9)]).unwrap();
        let ex = |t: &[&str]| BtExample {
            input: ControlTokens::IDENTITY.render(),
            target: t.iter().map(|s| s.to_string()).collect(),
            direction: Direction::ComplexToSimple,
        };
        let examples = vec![ex(&["a", "b"]), ex(&["b"]), ex(&[])];
        // -(ln .5 + ln .8 + ln 1), -(ln .25 + ln .9), -(ln .25)
        let hand = -((0.5f64.ln() + 0.8f64.ln()) + (0.25f64.ln() + 0.9f64.ln()) + 0.25f64.ln()) / 3.0;
        assert!((bt_loss(&m, &examples).unwrap().value() - hand).abs() < 1e-12);
        let zero = vec![ex(&["b", "b"])];
        assert_eq!(bt_loss(&m, &zero).unwrap(), Loss::Infinite { example: 0 });
        assert_eq!(bt_loss(&m, &[]), Err(ControlError::NoExamples));
    }

    fn sentence() -> impl Strategy<Value = Sentence> {
        prop::collection::vec("[a-z]{1,8}|[,.]", 1..12).prop_map(|v| Sentence::new(v.join(" ")))
    }

    proptest! {
        #[test]
        fn self_pair_all_ones(s in sentence()) {
            let c = control_tokens(&s, &s, &table(), None).unwrap();
            prop_assert_eq!(c, ControlTokens::IDENTITY);
        }

        #[test]
        fn prefix_strip_recovers_translation(s in sentence(), drop in 0.0f64..0.8, w in 0usize..3, seed: u64) {
            let cfg = NoiseConfig::new(drop, w).unwrap();
            let u = Sentence::from_tokens(&noise(&s.tokens, cfg, seed));
            let ex = make_bt_example(&s, |_| u.clone(), &table(), None, Direction::ComplexToSimple).unwrap();
            prop_assert_eq!(ex.translation().unwrap(), &u.tokens[..]);
        }
    }
}
