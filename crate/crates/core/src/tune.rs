//! Grid search over penalty coefficients on a validation set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::{decode_corpus, BeamConfig, PenaltyConfig};
use crate::metrics::{evaluate, EvalReport};
use crate::models::SequenceModel;
use crate::textproc::Sentence;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("grid dimension {0} is empty")]
    EmptyDimension(&'static str),
    #[error("grid dimension {0} is not strictly increasing finite values")]
    NotIncreasing(&'static str),
    #[error("cannot parse grid values {0:?}")]
    BadValues(String),
    #[error("beta must be finite and non-negative, got {0}")]
    BadBeta(f64),
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("{sources} validation sources but {refs} reference sets")]
    Misaligned { sources: usize, refs: usize },
    #[error("every grid point failed; first error: {0}")]
    AllFailed(String),
}

/// Candidate values for each coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambda_length: Vec<f64>,
    pub lambda_exact: Vec<f64>,
    pub lambda_fkgl: Vec<f64>,
}

pub const DEFAULT_VALUES: [f64; 5] = [0.1, 0.4, 0.7, 1.0, 1.3];

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lambda_length: DEFAULT_VALUES.to_vec(),
            lambda_exact: DEFAULT_VALUES.to_vec(),
            lambda_fkgl: DEFAULT_VALUES.to_vec(),
        }
    }
}

impl GridSpec {
    pub fn single(cfg: PenaltyConfig) -> Self {
        GridSpec {
            lambda_length: vec![cfg.lambda_length],
            lambda_exact: vec![cfg.lambda_exact],
            lambda_fkgl: vec![cfg.lambda_fkgl],
        }
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        for (name, vals) in [
            ("lambda_length", &self.lambda_length),
            ("lambda_exact", &self.lambda_exact),
            ("lambda_fkgl", &self.lambda_fkgl),
        ] {
            if vals.is_empty() {
                return Err(TuneError::EmptyDimension(name));
            }
            if vals.iter().any(|v| !v.is_finite()) || vals.windows(2).any(|w| w[0] >= w[1]) {
                return Err(TuneError::NotIncreasing(name));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lambda_length.len() * self.lambda_exact.len() * self.lambda_fkgl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All grid points in lexicographic `(length, exact, fkgl)` order.
    pub fn points(&self) -> Vec<PenaltyConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &l in &self.lambda_length {
            for &e in &self.lambda_exact {
                for &f in &self.lambda_fkgl {
                    out.push(PenaltyConfig::new(l, e, f));
                }
            }
        }
        out
    }
}

/// Parses either a comma-separated list (`0.1,0.5`) or an inclusive range
/// `start:stop:step` (`0.1:1.3:0.3`).
pub fn parse_values(text: &str) -> Result<Vec<f64>, TuneError> {
    let bad = || TuneError::BadValues(text.to_string());
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start.parse().map_err(|_| bad())?,
                stop.parse().map_err(|_| bad())?,
                step.parse().map_err(|_| bad())?,
            );
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) || stop < start {
                return Err(bad());
            }
            // round each point to 12 decimals so 0.1 + 3*0.3 prints as 1.0
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub config: PenaltyConfig,
    pub report: Option<EvalReport>,
    pub objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: PenaltyConfig,
    pub beta: f64,
    /// One row per grid point, in grid order.
    pub rows: Vec<TuneRow>,
}

pub const TABLE_HEADER: &str =
    "lambda_length\tlambda_exact\tlambda_fkgl\tbleu\tsari\tfkgl\tmatch\tadd\tdel\tobjective\terror";

impl TuneResult {
    pub fn best_row(&self) -> &TuneRow {
        self.rows
            .iter()
            .find(|r| r.config == self.best && r.objective.is_some())
            .expect("best is always a scored row")
    }

    /// The full table as TSV with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        s.push_str(TABLE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let c = r.config;
            let _ = write!(s, "{}\t{}\t{}\t", c.lambda_length, c.lambda_exact, c.lambda_fkgl);
            match (&r.report, r.objective) {
                (Some(m), Some(obj)) => {
                    let _ = writeln!(
                        s,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
                        m.bleu, m.sari, m.fkgl, m.exact_match, m.add, m.del, obj
                    );
                }
                _ => {
                    let err = r.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ");
                    let _ = writeln!(s, "\t\t\t\t\t\t\t{err}");
                }
            }
        }
        s
    }
}

/// `SARI - beta * FKGL`.
pub fn objective(report: &EvalReport, beta: f64) -> f64 {
    report.sari - beta * report.fkgl
}

/// Decodes the validation set at every grid point and picks the point with
/// the highest objective; ties go to the lexicographically smallest point.
///
/// `prefix` (usually control tokens) is prepended to every source before
/// decoding. A grid point whose decoding or evaluation fails is kept in the
/// table with its error and never selected.
pub fn tune<M: SequenceModel + Sync + ?Sized>(
    model: &M,
    sources: &[Sentence],
    refs: &[Vec<Sentence>],
    prefix: &[String],
    beam: &BeamConfig,
    grid: &GridSpec,
    beta: f64,
) -> Result<TuneResult, TuneError> {
    grid.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(TuneError::BadBeta(beta));
    }
    if sources.is_empty() {
        return Err(TuneError::EmptyValidation);
    }
    if sources.len() != refs.len() {
        return Err(TuneError::Misaligned {
            sources: sources.len(),
            refs: refs.len(),
        });
    }
    let inputs: Vec<Vec<String>> = sources
        .iter()
        .map(|s| prefix.iter().chain(&s.tokens).cloned().collect())
        .collect();

    let rows = crate::par::map(&grid.points(), |cfg| {
        let failed = |error: String| TuneRow {
            config: *cfg,
            report: None,
            objective: None,
            error: Some(error),
        };
        let mut hyps = Vec::with_capacity(inputs.len());
        for (i, out) in decode_corpus(model, &inputs, beam, cfg).into_iter().enumerate() {
            match out {
                Ok(o) => hyps.push(Sentence::from_tokens(o.best().output())),
                Err(e) => return failed(format!("sentence {}: {e}", i + 1)),
            }
        }
        match evaluate(sources, &hyps, refs) {
            Ok(report) => TuneRow {
                config: *cfg,
                objective: Some(objective(&report, beta)),
                report: Some(report),
                error: None,
            },
            Err(e) => failed(e.to_string()),
        }
    });

    let mut best: Option<(f64, PenaltyConfig)> = None;
    for r in &rows {
        if let Some(obj) = r.objective {
            if best.is_none_or(|(b, _)| obj > b) {
                best = Some((obj, r.config));
            }
        }
    }
    match best {
        Some((_, cfg)) => Ok(TuneResult { best: cfg, beta, rows }),
        None => Err(TuneError::AllFailed(
            rows.first().and_then(|r| r.error.clone()).unwrap_or_default(),
        )),
    }
}
