use std::path::Path;

use anyhow::Context;
use simpctl::models::{NgramModel, NoisyCopyModel, NoisyCopyParams, SequenceModel, TableModel};
use simpctl::textproc::tokenize;

use crate::error::{fail, Classify, CliResult, Exit};
use crate::io::read_text;

pub const HELP: &str = "\
Model specifications:
  copy                          copy the input (noisy-copy model with copy_prob 1)
  noisy-copy:<params.json>      noisy-copy model; JSON keys copy_prob, delete_prob,
                                stop_prob, lexicon (word -> list of replacements)
  table:<model.txt>             explicit table model, lines `source|prefix -> tok:p, ...`
  ngram:<order>:<k>:<corpus>    add-k smoothed n-gram LM trained on a text file";

/// Builds the model named by `spec`. `vocab` lists the input tokens so copy
/// models can emit every input word.
pub fn load(spec: &str, vocab: &[String]) -> CliResult<Box<dyn SequenceModel>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "copy" if rest.is_empty() => {
            let m = NoisyCopyModel::new(NoisyCopyParams::copy_only(), vocab).or_exit(Exit::Validation)?;
            Ok(Box::new(m))
        }
        "noisy-copy" => {
            let text = read_text(Path::new(rest))?;
            let params: NoisyCopyParams = serde_json::from_str(&text)
                .with_context(|| format!("bad noisy-copy parameters in {rest}"))
                .or_exit(Exit::Validation)?;
            let m = NoisyCopyModel::new(params, vocab).or_exit(Exit::Validation)?;
            Ok(Box::new(m))
        }
        "table" => {
            let text = read_text(Path::new(rest))?;
            let m = TableModel::parse(&text)
                .with_context(|| format!("bad table model {rest}"))
                .or_exit(Exit::Validation)?;
            Ok(Box::new(m))
        }
        "ngram" => {
            let parts: Vec<&str> = rest.splitn(3, ':').collect();
            let [order, k, path] = parts[..] else {
                return fail(Exit::Validation, format!("expected ngram:<order>:<k>:<corpus>, got {spec:?}"));
            };
            let order: usize = order
                .parse()
                .with_context(|| format!("bad n-gram order {order:?}"))
                .or_exit(Exit::Validation)?;
            let k: f64 = k
                .parse()
                .with_context(|| format!("bad add-k constant {k:?}"))
                .or_exit(Exit::Validation)?;
            let corpus: Vec<Vec<String>> = read_text(Path::new(path))?.lines().map(tokenize).collect();
            let m = NgramModel::train(&corpus, order, k).or_exit(Exit::Validation)?;
            Ok(Box::new(m))
        }
        _ => fail(Exit::Validation, format!("unknown model specification {spec:?}\n{HELP}")),
    }
}
