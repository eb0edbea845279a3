use std::collections::HashMap;

use super::{LogProbs, ModelError, SequenceModel, TokenId, Vocab};

const NORM_TOL: f64 = 1e-9;

/// Explicit lookup table of next-token distributions.
///
/// A state is keyed by the space-joined source (or any source) and the
/// space-joined target prefix. Lookup order: exact source, wildcard source,
/// then the default distribution (uniform unless set).
#[derive(Debug, Clone)]
pub struct TableModel {
    vocab: Vocab,
    exact: HashMap<(String, String), LogProbs>,
    wildcard: HashMap<String, LogProbs>,
    default: LogProbs,
}

type Entry = (String, f64);

impl TableModel {
    /// Builds a model with a uniform default over `tokens` plus end-of-sequence.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let vocab = Vocab::new(tokens);
        let n = vocab.len();
        TableModel {
            vocab,
            exact: HashMap::new(),
            wildcard: HashMap::new(),
            default: vec![-(n as f64).ln(); n],
        }
    }

    fn dense(&self, dist: &[Entry]) -> Result<LogProbs, ModelError> {
        let mut p = vec![0.0; self.vocab.len()];
        for (tok, prob) in dist {
            let id = self.vocab.id(tok).ok_or_else(|| ModelError::Oov(tok.clone()))?;
            if !(0.0..=1.0).contains(prob) {
                return Err(ModelError::BadParameter(format!("probability {prob} for {tok:?}")));
            }
            p[id.index()] += prob;
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ModelError::Unnormalized(sum));
        }
        Ok(p.iter()
            .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
            .collect())
    }

    /// Sets the distribution for `(source, prefix)`; `None` matches any source.
    pub fn set_state<S: AsRef<str>>(
        &mut self,
        source: Option<&[S]>,
        prefix: &[S],
        dist: &[(&str, f64)],
    ) -> Result<(), ModelError> {
        let dist: Vec<Entry> = dist.iter().map(|(t, p)| (t.to_string(), *p)).collect();
        let lp = self.dense(&dist)?;
        let pk = join(prefix);
        match source {
            Some(s) => {
                self.exact.insert((join(s), pk), lp);
            }
            None => {
                self.wildcard.insert(pk, lp);
            }
        }
        Ok(())
    }

    pub fn set_default(&mut self, dist: &[(&str, f64)]) -> Result<(), ModelError> {
        let dist: Vec<Entry> = dist.iter().map(|(t, p)| (t.to_string(), *p)).collect();
        self.default = self.dense(&dist)?;
        Ok(())
    }

    /// Number of explicitly listed states.
    pub fn n_states(&self) -> usize {
        self.exact.len() + self.wildcard.len()
    }

    /// Parses the text format, one state per line:
    ///
    /// ```text
    /// # comment
    /// the cat|        -> the:0.6, a:0.4
    /// *|the           -> cat:1.0
    /// default         -> </s>:1.0
    /// ```
    ///
    /// `→` is accepted in place of `->`. The vocabulary is every token that
    /// appears in a prefix or a distribution.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        enum Key {
            Default,
            State(Option<String>, String),
        }
        let mut rows: Vec<(usize, Key, Vec<Entry>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| ModelError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            let (lhs, rhs) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| err("missing '->'"))?;
            let lhs = lhs.trim();
            let key = if lhs == "default" {
                Key::Default
            } else {
                let (src, prefix) = lhs.split_once('|').ok_or_else(|| err("state must be 'source|prefix'"))?;
                let src = src.trim();
                let src = (src != "*").then(|| normalize(src));
                Key::State(src, normalize(prefix))
            };
            let mut dist = Vec::new();
            for item in rhs.split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (tok, p) = item.rsplit_once(':').ok_or_else(|| err("entries must be 'token:prob'"))?;
                let p: f64 = p.trim().parse().map_err(|_| err("probability is not a number"))?;
                dist.push((tok.trim().to_string(), p));
            }
            if dist.is_empty() {
                return Err(err("empty distribution"));
            }
            rows.push((line_no, key, dist));
        }
        let mut tokens: Vec<String> = Vec::new();
        for (_, key, dist) in &rows {
            if let Key::State(_, p) = key {
                tokens.extend(p.split_whitespace().map(String::from));
            }
            tokens.extend(dist.iter().map(|e| e.0.clone()));
        }
        let mut model = TableModel::new(tokens);
        for (line, key, dist) in rows {
            let lp = model.dense(&dist).map_err(|e| ModelError::Parse {
                line,
                message: e.to_string(),
            })?;
            match key {
                Key::Default => model.default = lp,
                Key::State(Some(s), p) => {
                    model.exact.insert((s, p), lp);
                }
                Key::State(None, p) => {
                    model.wildcard.insert(p, lp);
                }
            }
        }
        Ok(model)
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn join<S: AsRef<str>>(t: &[S]) -> String {
    t.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}

impl SequenceModel for TableModel {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn step_logprobs(&self, source: &[String], prefix: &[TokenId]) -> Result<LogProbs, ModelError> {
        let pk = join(&self.vocab.decode(prefix));
        if !self.exact.is_empty() {
            if let Some(lp) = self.exact.get(&(join(source), pk.clone())) {
                return Ok(lp.clone());
            }
        }
        Ok(self.wildcard.get(&pk).unwrap_or(&self.default).clone())
    }
}
