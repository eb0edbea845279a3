use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use simpctl::control::leading_controls;
use simpctl::textproc::tokenize;
use simpctl::Sentence;

use crate::error::{fail, Classify, CliResult, Exit};

pub fn read_text(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .or_exit(Exit::Missing)?;
    String::from_utf8(bytes)
        .with_context(|| format!("{} is not valid UTF-8", path.display()))
        .or_exit(Exit::Validation)
}

pub fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

pub fn read_sentences(path: &Path) -> CliResult<Vec<Sentence>> {
    Ok(read_lines(path)?.into_iter().map(Sentence::new).collect())
}

/// Fails with a validation error unless every file has `expected` lines.
pub fn check_aligned(expected: (&Path, usize), others: &[(&Path, usize)]) -> CliResult<()> {
    for (p, n) in others {
        if *n != expected.1 {
            return fail(
                Exit::Validation,
                format!(
                    "{} has {} lines but {} has {}",
                    p.display(),
                    n,
                    expected.0.display(),
                    expected.1
                ),
            );
        }
    }
    Ok(())
}

/// Reads N reference files and regroups them per line.
pub fn read_references(paths: &[PathBuf], expected: (&Path, usize)) -> CliResult<Vec<Vec<Sentence>>> {
    let mut per_line: Vec<Vec<Sentence>> = vec![Vec::new(); expected.1];
    for p in paths {
        let refs = read_sentences(p)?;
        check_aligned(expected, &[(p, refs.len())])?;
        for (slot, r) in per_line.iter_mut().zip(refs) {
            slot.push(r);
        }
    }
    Ok(per_line)
}

/// Tokens of a model input line: leading control tokens verbatim, the rest
/// tokenized like any sentence.
pub fn input_tokens(line: &str) -> Vec<String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let (_, n) = leading_controls(&words);
    let mut out: Vec<String> = words[..n].iter().map(|w| w.to_string()).collect();
    out.extend(tokenize(&words[n..].join(" ")));
    out
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content)
            .with_context(|| format!("cannot write {}", p.display()))
            .or_exit(Exit::Missing),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .context("cannot write to stdout")
                .or_exit(Exit::Missing)
        }
    }
}

pub fn lines_to_string<I: IntoIterator<Item = String>>(lines: I) -> String {
    let mut s = String::new();
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}
