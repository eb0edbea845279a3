//! SARI: add/keep/delete n-gram scores against source and references.
//!
//! Per order n, with R references, source and hypothesis counts are scaled by
//! R and compared against the reference counts summed over the set (the
//! integer form of averaging the references):
//!
//! * add: set-level F1 of hypothesis n-grams absent from the source,
//!   against reference n-grams absent from the source;
//! * keep: F1 of `min(src, hyp)` clipped by the references, against
//!   `min(src, refs)`;
//! * delete: precision of `src - hyp` clipped by `src - refs`.
//!
//! A component whose system side and reference side are both empty (nothing
//! added and nothing to add, say) scores 1. Orders at which source,
//! hypothesis and references have no n-grams at all are left out of the
//! average over orders. Sentence scores are macro-averaged over the corpus.

use std::collections::{HashMap, HashSet};

use super::{check_aligned, count_ngrams, MetricError};
use crate::textproc::Sentence;

pub const MAX_ORDER: usize = 4;

/// Raw component counts for one n-gram order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OrderCounts {
    pub add_correct: usize,
    pub add_hyp: usize,
    pub add_ref: usize,
    pub keep_correct: usize,
    pub keep_hyp: usize,
    pub keep_ref: usize,
    pub del_correct: usize,
    pub del_hyp: usize,
    pub del_ref: usize,
    /// Whether any of source, hypothesis or references has an n-gram here.
    pub present: bool,
}

impl OrderCounts {
    pub fn add_f1(&self) -> f64 {
        f1(self.add_correct, self.add_hyp, self.add_ref)
    }

    pub fn keep_f1(&self) -> f64 {
        f1(self.keep_correct, self.keep_hyp, self.keep_ref)
    }

    pub fn del_precision(&self) -> f64 {
        if self.del_hyp == 0 {
            return if self.del_ref == 0 { 1.0 } else { 0.0 };
        }
        self.del_correct as f64 / self.del_hyp as f64
    }

    pub fn score(&self) -> f64 {
        (self.add_f1() + self.keep_f1() + self.del_precision()) / 3.0
    }
}

fn f1(correct: usize, sys_total: usize, ref_total: usize) -> f64 {
    if sys_total == 0 && ref_total == 0 {
        return 1.0;
    }
    let p = if sys_total > 0 {
        correct as f64 / sys_total as f64
    } else {
        0.0
    };
    let r = if ref_total > 0 {
        correct as f64 / ref_total as f64
    } else {
        0.0
    };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn order_counts(src: &[String], hyp: &[String], refs: &[&[String]], n: usize) -> OrderCounts {
    let r_count = refs.len();
    let s = count_ngrams(src, n);
    let h = count_ngrams(hyp, n);
    let mut r: HashMap<&[String], usize> = HashMap::new();
    for rt in refs {
        for (g, c) in count_ngrams(rt, n) {
            *r.entry(g).or_insert(0) += c;
        }
    }
    let get = |m: &HashMap<&[String], usize>, g: &[String]| m.get(g).copied().unwrap_or(0);

    let mut out = OrderCounts {
        present: !(s.is_empty() && h.is_empty() && r.is_empty()),
        ..Default::default()
    };

    let s_set: HashSet<&[String]> = s.keys().copied().collect();
    for g in h.keys().filter(|g| !s_set.contains(*g)) {
        out.add_hyp += 1;
        if r.contains_key(g) {
            out.add_correct += 1;
        }
    }
    out.add_ref = r.keys().filter(|g| !s_set.contains(*g)).count();

    for (g, &sc) in &s {
        let sc = sc * r_count;
        let hc = get(&h, g) * r_count;
        let rc = get(&r, g);
        let kept = sc.min(hc);
        out.keep_hyp += kept;
        out.keep_correct += kept.min(rc);
        out.keep_ref += sc.min(rc);
        let deleted = sc.saturating_sub(hc);
        let should_delete = sc.saturating_sub(rc);
        out.del_hyp += deleted;
        out.del_ref += should_delete;
        out.del_correct += deleted.min(should_delete);
    }
    out
}

/// Sentence-level SARI in [0, 1].
pub fn sentence_sari(src: &Sentence, hyp: &Sentence, refs: &[Sentence]) -> f64 {
    let rt: Vec<&[String]> = refs.iter().map(|r| r.tokens.as_slice()).collect();
    let mut sum = 0.0;
    let mut used = 0;
    for n in 1..=MAX_ORDER {
        let c = order_counts(&src.tokens, &hyp.tokens, &rt, n);
        if c.present {
            sum += c.score();
            used += 1;
        }
    }
    if used == 0 {
        1.0
    } else {
        sum / used as f64
    }
}

/// Per-sentence SARI scores on a 0-100 scale.
pub fn sentence_scores(
    srcs: &[Sentence],
    hyps: &[Sentence],
    refs: &[Vec<Sentence>],
) -> Result<Vec<f64>, MetricError> {
    check_aligned(srcs.len(), hyps.len())?;
    check_aligned(srcs.len(), refs.len())?;
    if let Some(i) = refs.iter().position(Vec::is_empty) {
        return Err(MetricError::NoReference(i));
    }
    Ok(crate::par::map_indexed(srcs, |i, s| {
        100.0 * sentence_sari(s, &hyps[i], &refs[i])
    }))
}

/// Corpus SARI on a 0-100 scale, macro-averaged over sentences.
pub fn sari(srcs: &[Sentence], hyps: &[Sentence], refs: &[Vec<Sentence>]) -> Result<f64, MetricError> {
    let scores = sentence_scores(srcs, hyps, refs)?;
    if scores.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(super::order_free_mean(&scores))
}
