use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use simpctl::control::{
    control_tokens, leading_controls, prepare_bt_corpus, ControlError, DepthProvider, FreqFormat, NoiseConfig,
    SidecarDepths,
};
use simpctl::decode::{decode_corpus, BeamConfig, DecodeOutput, PenaltyConfig, PenaltyMode};
use simpctl::metrics::{evaluate, sari::sentence_scores, CorpusStats, EvalReport, ReadabilityCounts};
use simpctl::tune::{parse_values, GridSpec, TuneError};
use simpctl::{par, Direction, FrequencyTable, Sentence};

use crate::error::{fail, Classify, CliError, CliResult, Exit};
use crate::io::{check_aligned, emit, input_tokens, lines_to_string, read_lines, read_references, read_sentences, read_text};
use crate::{
    model_spec, DecodeArgs, DirectionArg, EvalArgs, FreqFormatArg, PrepareBtArgs, SearchArgs, StatsArgs, TokensArgs,
    TuneArgs,
};

pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start worker threads")
            .or_exit(Exit::Validation)?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn stats(a: &StatsArgs) -> CliResult<()> {
    let src = read_sentences(&a.src)?;
    let tgt = match &a.tgt {
        Some(p) => {
            let t = read_sentences(p)?;
            check_aligned((&a.src, src.len()), &[(p, t.len())])?;
            Some(t)
        }
        None => None,
    };
    let st = CorpusStats::of(&src, tgt.as_deref()).or_exit(Exit::Validation)?;
    let mut out = String::from("n_sentences\tsrc_tokens\tsrc_vocab\tsrc_fkgl\ttgt_tokens\ttgt_vocab\ttgt_fkgl\tcompression\n");
    let t = st.target;
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        st.source.n_sentences,
        st.source.n_tokens,
        st.source.vocab_size,
        st.source.fkgl,
        t.map(|x| x.n_tokens.to_string()).unwrap_or_default(),
        t.map(|x| x.vocab_size.to_string()).unwrap_or_default(),
        opt(t.map(|x| x.fkgl)),
        opt(st.mean_compression),
    );
    emit(None, &out)?;
    if let Some(p) = &a.json {
        emit(Some(p), &to_json(&st))?;
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let src = read_sentences(&a.src)?;
    let hyp = read_sentences(&a.hyp)?;
    check_aligned((&a.src, src.len()), &[(&a.hyp, hyp.len())])?;
    let refs = read_references(&a.refs, (&a.src, src.len()))?;
    let report = evaluate(&src, &hyp, &refs).or_exit(Exit::Validation)?;
    emit(None, &format!("{}\n{}\n", EvalReport::TSV_HEADER, report.tsv_row()))?;
    if let Some(p) = &a.json {
        emit(Some(p), &to_json(&report))?;
    }
    if let Some(p) = &a.per_sentence {
        let sari = sentence_scores(&src, &hyp, &refs).or_exit(Exit::Validation)?;
        let mut out = String::from("line\tsari\tfkgl\n");
        for (i, (s, h)) in sari.iter().zip(&hyp).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, s, opt(ReadabilityCounts::of(h).fkgl().ok()));
        }
        emit(Some(p), &out)?;
    }
    Ok(())
}

fn freq_format(f: FreqFormatArg) -> FreqFormat {
    match f {
        FreqFormatArg::Auto => FreqFormat::Auto,
        FreqFormatArg::Rank => FreqFormat::Rank,
        FreqFormatArg::Count => FreqFormat::Count,
    }
}

fn load_freq(path: &Path, format: FreqFormatArg) -> CliResult<FrequencyTable> {
    let text = read_text(path)?;
    FrequencyTable::parse(&text, freq_format(format), path.display().to_string())
        .with_context(|| format!("bad frequency table {}", path.display()))
        .or_exit(Exit::Validation)
}

fn first_empty_line(path: &Path, sentences: &[Sentence]) -> CliResult<()> {
    match sentences.iter().position(Sentence::is_empty) {
        Some(i) => fail(Exit::Validation, format!("{} line {}: empty sentence", path.display(), i + 1)),
        None => Ok(()),
    }
}

pub fn tokens(a: &TokensArgs) -> CliResult<()> {
    let Some(freq) = &a.freq else {
        return fail(Exit::Missing, "a frequency table is required (--freq)");
    };
    let src = read_sentences(&a.src)?;
    let tgt_lines = read_lines(&a.tgt)?;
    check_aligned((&a.src, src.len()), &[(&a.tgt, tgt_lines.len())])?;
    let tgt: Vec<Sentence> = tgt_lines.iter().map(Sentence::new).collect();
    for (i, (s, t)) in src.iter().zip(&tgt).enumerate() {
        if s.is_empty() || t.is_empty() {
            let which = if s.is_empty() { &a.src } else { &a.tgt };
            return fail(Exit::Validation, format!("{} line {}: empty sentence", which.display(), i + 1));
        }
    }
    let table = load_freq(freq, a.freq_format)?;
    let depths = match (&a.src_depths, &a.tgt_depths) {
        (Some(sp), Some(tp)) => {
            let mut d = SidecarDepths::parse(&read_text(sp)?, &src)
                .with_context(|| format!("bad depth file {}", sp.display()))
                .or_exit(Exit::Validation)?;
            d.extend(
                SidecarDepths::parse(&read_text(tp)?, &tgt)
                    .with_context(|| format!("bad depth file {}", tp.display()))
                    .or_exit(Exit::Validation)?,
            );
            Some(d)
        }
        _ => None,
    };
    let provider = depths.as_ref().map(|d| d as &dyn DepthProvider);
    let rendered = par::map_indexed(&src, |i, s| control_tokens(s, &tgt[i], &table, provider));
    let mut lines = Vec::with_capacity(src.len());
    for (i, r) in rendered.into_iter().enumerate() {
        let ct = r.with_context(|| format!("line {}", i + 1)).or_exit(Exit::Validation)?;
        lines.push(format!("{ct}\t{}", tgt_lines[i].trim()));
    }
    emit(a.out.as_deref(), &lines_to_string(lines))
}

pub fn prepare_bt(a: &PrepareBtArgs, seed: u64) -> CliResult<()> {
    let noise = NoiseConfig::new(a.drop, a.shuffle).or_exit(Exit::Validation)?;
    let corpus = read_sentences(&a.input)?;
    first_empty_line(&a.input, &corpus)?;
    let table = match &a.freq {
        Some(p) => load_freq(p, a.freq_format)?,
        None => FrequencyTable::from_corpus(&corpus, a.input.display().to_string()),
    };
    let direction = match a.direction {
        DirectionArg::ComplexToSimple => Direction::ComplexToSimple,
        DirectionArg::SimpleToComplex => Direction::SimpleToComplex,
    };
    let examples = prepare_bt_corpus(&corpus, noise, seed, &table, direction).map_err(|e| match e {
        ControlError::AtSentence { index, error } => CliError {
            exit: Exit::Validation,
            error: anyhow::anyhow!("{} line {}: {error}", a.input.display(), index + 1),
        },
        e => CliError {
            exit: Exit::Validation,
            error: e.into(),
        },
    })?;
    emit(a.out.as_deref(), &lines_to_string(examples.iter().map(|e| e.to_tsv_line())))
}

fn beam_config(s: &SearchArgs) -> CliResult<BeamConfig> {
    if s.beam == 0 || s.max_len == 0 {
        return fail(Exit::Validation, "--beam and --max-len must be at least 1");
    }
    let mut b = BeamConfig::new(s.beam, s.max_len);
    if s.rescore {
        b.mode = PenaltyMode::Final;
    }
    Ok(b)
}

fn prefix_tokens(s: &SearchArgs) -> CliResult<Vec<String>> {
    let Some(p) = &s.prefix else {
        return Ok(Vec::new());
    };
    let words: Vec<String> = p.split_whitespace().map(String::from).collect();
    let (_, n) = leading_controls(&words);
    if n != words.len() {
        return fail(Exit::Validation, format!("--prefix must contain only control tokens, got {:?}", words[n]));
    }
    Ok(words)
}

/// Content tokens of model inputs, for models that copy from the input.
fn content_vocab(inputs: &[Vec<String>]) -> Vec<String> {
    let mut v: Vec<String> = inputs
        .iter()
        .flat_map(|t| {
            let (_, n) = leading_controls(t);
            t[n..].to_vec()
        })
        .collect();
    v.sort();
    v.dedup();
    v
}

fn penalties(a: &DecodeArgs) -> CliResult<PenaltyConfig> {
    let mut cfg = match &a.penalties {
        Some(p) => serde_json::from_str::<PenaltyConfig>(&read_text(p)?)
            .with_context(|| format!("bad penalty configuration {}", p.display()))
            .or_exit(Exit::Validation)?,
        None => PenaltyConfig::VANILLA,
    };
    if let Some(v) = a.lp {
        cfg.lambda_length = v;
    }
    if let Some(v) = a.emp {
        cfg.lambda_exact = v;
    }
    if let Some(v) = a.fkglp {
        cfg.lambda_fkgl = v;
    }
    if !cfg.is_finite() {
        return fail(Exit::Validation, "penalty coefficients must be finite");
    }
    Ok(cfg)
}

pub fn decode(a: &DecodeArgs) -> CliResult<()> {
    let beam = beam_config(&a.search)?;
    let cfg = penalties(a)?;
    if a.n_best == Some(0) {
        return fail(Exit::Validation, "--n-best must be at least 1");
    }
    let prefix = prefix_tokens(&a.search)?;
    let inputs: Vec<Vec<String>> = read_lines(&a.input)?
        .iter()
        .map(|l| prefix.iter().cloned().chain(input_tokens(l)).collect())
        .collect();
    let model = model_spec::load(&a.search.model, &content_vocab(&inputs))?;
    let outputs = decode_corpus(&model, &inputs, &beam, &cfg);
    let mut decoded: Vec<DecodeOutput> = Vec::with_capacity(outputs.len());
    for (i, o) in outputs.into_iter().enumerate() {
        let o = o.with_context(|| format!("line {}", i + 1)).or_exit(Exit::Decode)?;
        if o.truncated {
            eprintln!("warning: line {}: no hypothesis finished within --max-len {}", i + 1, beam.max_len);
        }
        decoded.push(o);
    }
    let text = match a.n_best {
        None => lines_to_string(decoded.iter().map(|o| o.best().output().join(" "))),
        Some(k) => {
            let mut s = String::from("line\trank\tscore\tlogprob\tcomplete\toutput\n");
            for (i, o) in decoded.iter().enumerate() {
                for (r, h) in o.hypotheses.iter().take(k).enumerate() {
                    let _ = writeln!(
                        s,
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        i + 1,
                        r + 1,
                        h.adjusted_score,
                        h.logprob,
                        h.complete,
                        h.output().join(" ")
                    );
                }
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}

pub fn tune(a: &TuneArgs) -> CliResult<()> {
    let beam = beam_config(&a.search)?;
    let grid = GridSpec {
        lambda_length: parse_values(&a.grid_length).or_exit(Exit::Validation)?,
        lambda_exact: parse_values(&a.grid_exact).or_exit(Exit::Validation)?,
        lambda_fkgl: parse_values(&a.grid_fkgl).or_exit(Exit::Validation)?,
    };
    grid.validate().or_exit(Exit::Validation)?;
    let prefix = prefix_tokens(&a.search)?;
    let src = read_sentences(&a.src)?;
    let refs = read_references(&a.refs, (&a.src, src.len()))?;
    let inputs: Vec<Vec<String>> = src.iter().map(|s| s.tokens.clone()).collect();
    let model = model_spec::load(&a.search.model, &content_vocab(&inputs))?;
    let result = simpctl::tune::tune(&model, &src, &refs, &prefix, &beam, &grid, a.beta).map_err(|e| {
        let exit = match e {
            TuneError::AllFailed(_) => Exit::Decode,
            _ => Exit::Validation,
        };
        CliError { exit, error: e.into() }
    })?;
    emit(a.table.as_deref(), &result.to_tsv())?;
    if let Some(p) = &a.best {
        emit(Some(p), &to_json(&result.best))?;
    }
    Ok(())
}
