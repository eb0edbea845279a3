//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's metric or search
//! code; n-grams are counted by linear scans over token windows.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use simpctl::models::{SequenceModel, TableModel, TokenId, EOS};

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Every token sequence over `alphabet` with length in `0..=max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for a in alphabet {
                let mut t = s.clone();
                t.push(a.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn windows(tokens: &[String], n: usize) -> Vec<&[String]> {
    if tokens.len() < n {
        Vec::new()
    } else {
        (0..=tokens.len() - n).map(|i| &tokens[i..i + n]).collect()
    }
}

fn occurrences(tokens: &[String], gram: &[String]) -> usize {
    windows(tokens, gram.len()).into_iter().filter(|w| *w == gram).count()
}

fn distinct<'a>(grams: &[&'a [String]]) -> Vec<&'a [String]> {
    let mut out: Vec<&[String]> = Vec::new();
    for g in grams {
        if !out.contains(g) {
            out.push(g);
        }
    }
    out
}

/// Corpus BLEU-4: clipped precision against the per-n-gram maximum over
/// references, closest reference length (shorter on ties), trailing orders
/// with no hypothesis n-grams dropped, 0 if any kept order has no match.
pub fn oracle_bleu(hyps: &[Vec<String>], refs: &[Vec<Vec<String>>]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rs) in hyps.iter().zip(refs) {
        c += h.len();
        let mut best = usize::MAX;
        for x in rs {
            let d = x.len().abs_diff(h.len());
            let bd = best.abs_diff(h.len());
            if best == usize::MAX || d < bd || (d == bd && x.len() < best) {
                best = x.len();
            }
        }
        r += best;
        for n in 1..=4 {
            let hw = windows(h, n);
            totals[n - 1] += hw.len();
            for g in distinct(&hw) {
                let max_ref = rs.iter().map(|x| occurrences(x, g)).max().unwrap_or(0);
                matches[n - 1] += occurrences(h, g).min(max_ref);
            }
        }
    }
    let mut orders = 4;
    while orders > 0 && totals[orders - 1] == 0 {
        orders -= 1;
    }
    if orders == 0 || c == 0 {
        return 0.0;
    }
    let mut prod = 1.0;
    for n in 0..orders {
        if matches[n] == 0 {
            return 0.0;
        }
        prod *= matches[n] as f64 / totals[n] as f64;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * prod.powf(1.0 / orders as f64)
}

fn f1(correct: f64, sys: f64, reference: f64) -> f64 {
    if sys == 0.0 && reference == 0.0 {
        return 1.0;
    }
    let p = if sys > 0.0 { correct / sys } else { 0.0 };
    let r = if reference > 0.0 { correct / reference } else { 0.0 };
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Sentence SARI on a 0-100 scale with averaged-reference counts: a
/// reference n-gram's weight is its mean count over the references.
pub fn oracle_sari(src: &[String], hyp: &[String], refs: &[Vec<String>]) -> f64 {
    let nr = refs.len() as f64;
    let mut total = 0.0;
    let mut used = 0;
    for n in 1..=4 {
        let sw = windows(src, n);
        let hw = windows(hyp, n);
        let rw: Vec<&[String]> = refs.iter().flat_map(|r| windows(r, n)).collect();
        if sw.is_empty() && hw.is_empty() && rw.is_empty() {
            continue;
        }
        used += 1;
        let rcount = |g: &[String]| refs.iter().map(|r| occurrences(r, g)).sum::<usize>() as f64 / nr;

        // add: n-gram types new with respect to the source
        let h_new: Vec<&[String]> = distinct(&hw).into_iter().filter(|g| !sw.contains(g)).collect();
        let r_new: Vec<&[String]> = distinct(&rw).into_iter().filter(|g| !sw.contains(g)).collect();
        let add_ok = h_new.iter().filter(|g| r_new.contains(g)).count();
        let add = f1(add_ok as f64, h_new.len() as f64, r_new.len() as f64);

        // keep and delete: fractional counts over source n-gram types
        let (mut kc, mut kh, mut kr) = (0.0, 0.0, 0.0);
        let (mut dc, mut dh, mut dr) = (0.0, 0.0, 0.0);
        for g in distinct(&sw) {
            let s = occurrences(src, g) as f64;
            let h = occurrences(hyp, g) as f64;
            let r = rcount(g);
            let kept = s.min(h);
            kh += kept;
            kc += kept.min(r);
            kr += s.min(r);
            let deleted = (s - h).max(0.0);
            let should = (s - r).max(0.0);
            dh += deleted;
            dr += should;
            dc += deleted.min(should);
        }
        let keep = f1(kc, kh, kr);
        let del = if dh == 0.0 {
            if dr == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            dc / dh
        };
        total += (add + keep + del) / 3.0;
    }
    if used == 0 {
        100.0
    } else {
        100.0 * total / used as f64
    }
}

/// Words with hand-counted syllables used by generated models.
pub const WORDS: [(&str, usize); 9] = [
    ("the", 1),
    ("cat", 1),
    ("sat", 1),
    ("dog", 1),
    ("water", 2),
    ("happy", 2),
    ("elephant", 3),
    ("on", 1),
    (".", 0),
];

fn syllables(token: &str) -> Option<usize> {
    WORDS.iter().find(|(w, _)| *w == token).map(|(_, s)| *s)
}

/// `λ_length·len + λ_exact·cos + λ_fkgl·FKGL` for hypotheses over [`WORDS`].
pub fn oracle_penalty(hyp: &[String], src: &[String], cfg: (f64, f64, f64)) -> f64 {
    let content: Vec<&String> = hyp.iter().filter(|t| t.as_str() != EOS).collect();
    let len = content.len() as f64;
    let mut hc: BTreeMap<&str, f64> = BTreeMap::new();
    for t in &content {
        *hc.entry(t.as_str()).or_default() += 1.0;
    }
    let mut sc: BTreeMap<&str, f64> = BTreeMap::new();
    for t in src {
        *sc.entry(t.as_str()).or_default() += 1.0;
    }
    let dot: f64 = hc.iter().map(|(k, v)| v * sc.get(k).copied().unwrap_or(0.0)).sum();
    let nh: f64 = hc.values().map(|v| v * v).sum::<f64>().sqrt();
    let ns: f64 = sc.values().map(|v| v * v).sum::<f64>().sqrt();
    let cos = if nh == 0.0 || ns == 0.0 { 0.0 } else { dot / (nh * ns) };
    let words: Vec<&&String> = content.iter().filter(|t| t.as_str() != ".").collect();
    let fk = if words.is_empty() {
        0.0
    } else {
        let syl: usize = words.iter().map(|w| syllables(w).expect("word list")).sum();
        0.39 * words.len() as f64 + 11.8 * syl as f64 / words.len() as f64 - 15.59
    };
    cfg.0 * len + cfg.1 * cos + cfg.2 * fk
}

/// A random prefix tree over a few [`WORDS`], at most `budget` prefixes
/// (counting finished ones). Unlisted prefixes end deterministically.
pub fn random_table(rng: &mut ChaCha8Rng, budget: usize) -> TableModel {
    let vocab_size = rng.gen_range(2..=5);
    let mut pool: Vec<&str> = WORDS.iter().map(|w| w.0).collect();
    let mut words = Vec::new();
    for _ in 0..vocab_size {
        let i = rng.gen_range(0..pool.len());
        words.push(pool.remove(i));
    }
    let max_depth = rng.gen_range(2..=6);
    let mut model = TableModel::new(&words);
    model.set_default(&[(EOS, 1.0)]).unwrap();
    let mut count = 1;
    let mut queue: std::collections::VecDeque<Vec<&str>> = vec![Vec::new()].into();
    while let Some(prefix) = queue.pop_front() {
        if prefix.len() >= max_depth {
            continue;
        }
        let mut support: Vec<&str> = words.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        if (prefix.is_empty() && support.is_empty()) || rng.gen_bool(0.5) {
            support.push(EOS);
        }
        if support.is_empty() || count + support.len() > budget {
            continue;
        }
        count += support.len();
        let weights: Vec<f64> = support.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let z: f64 = weights.iter().sum();
        let dist: Vec<(&str, f64)> = support.iter().copied().zip(weights.iter().map(|w| w / z)).collect();
        model.set_state(None, &prefix, &dist).unwrap();
        for t in support.into_iter().filter(|t| *t != EOS) {
            let mut p = prefix.clone();
            p.push(t);
            queue.push_back(p);
        }
    }
    model
}

/// Every complete output with at most `max_len` tokens before end-of-sequence
/// and positive probability, with its log-probability.
pub fn enumerate_outputs<M: SequenceModel>(model: &M, source: &[String], max_len: usize) -> Vec<(Vec<String>, f64)> {
    fn walk<M: SequenceModel>(
        model: &M,
        source: &[String],
        max_len: usize,
        ids: &mut Vec<TokenId>,
        lp: f64,
        out: &mut Vec<(Vec<String>, f64)>,
    ) {
        let dist = model.next_logprobs(source, ids).unwrap();
        for (i, &l) in dist.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            let id = TokenId(i as u32);
            if id == TokenId::EOS {
                let mut t = model.vocab().decode(ids);
                t.push(EOS.to_string());
                out.push((t, lp + l));
            } else if ids.len() < max_len {
                ids.push(id);
                walk(model, source, max_len, ids, lp + l, out);
                ids.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(model, source, max_len, &mut Vec::new(), 0.0, &mut out);
    out
}

/// Brute-force argmax of `logprob - penalty` with ties broken by higher
/// log-probability, then lexicographically smaller tokens.
pub fn brute_force_best<M: SequenceModel>(
    model: &M,
    source: &[String],
    max_len: usize,
    cfg: (f64, f64, f64),
) -> Option<(Vec<String>, f64, f64)> {
    enumerate_outputs(model, source, max_len)
        .into_iter()
        .map(|(t, lp)| {
            let adj = lp - oracle_penalty(&t, source, cfg);
            (t, lp, adj)
        })
        .min_by(|a, b| {
            b.2.total_cmp(&a.2)
                .then(b.1.total_cmp(&a.1))
                .then_with(|| a.0.cmp(&b.0))
        })
}

/// Textbook beam search without penalties: expand, sort by log-probability,
/// retire finished hypotheses that rank in the top `k`, keep `k` open ones.
pub fn reference_beam<M: SequenceModel>(
    model: &M,
    source: &[String],
    k: usize,
    max_len: usize,
) -> (Vec<(Vec<String>, f64)>, bool) {
    let vocab = model.vocab();
    let mut open: Vec<(Vec<TokenId>, f64)> = vec![(Vec::new(), 0.0)];
    let mut done: Vec<(Vec<String>, f64)> = Vec::new();
    for step in 0..=max_len {
        let mut cand: Vec<(Vec<TokenId>, Vec<String>, f64)> = Vec::new();
        for (ids, lp) in &open {
            let dist = model.next_logprobs(source, ids).unwrap();
            for (i, &l) in dist.iter().enumerate() {
                if l == f64::NEG_INFINITY || (step == max_len && i != 0) {
                    continue;
                }
                let mut ni = ids.clone();
                ni.push(TokenId(i as u32));
                let words = vocab.decode(&ni);
                cand.push((ni, words, lp + l));
            }
        }
        cand.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.1.cmp(&b.1)));
        let mut next = Vec::new();
        for (rank, (ids, words, lp)) in cand.into_iter().enumerate() {
            if ids.last() == Some(&TokenId::EOS) {
                if rank < k {
                    done.push((words, lp));
                }
            } else if next.len() < k {
                next.push((ids, lp));
            }
        }
        if next.is_empty() {
            break;
        }
        open = next;
    }
    if done.is_empty() {
        let (ids, lp) = open
            .into_iter()
            .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| vocab.decode(&a.0).cmp(&vocab.decode(&b.0))))
            .unwrap();
        return (vec![(vocab.decode(&ids), lp)], true);
    }
    done.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    (done, false)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, alphabet: &[&str], min: usize, max: usize) -> Vec<String> {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string()).collect()
}
