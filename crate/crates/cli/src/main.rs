use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod io;
mod model_spec;

#[derive(Parser, Debug)]
#[command(name = "simpctl", version, about = "Controllable text simplification toolkit")]
struct Cli {
    /// Random seed for commands that sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Affects speed only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Corpus statistics: sizes, vocabularies, compression and FKGL.
    Stats(StatsArgs),
    /// Score a system output against references.
    Eval(EvalArgs),
    /// Annotate target sentences with control tokens computed from source/target pairs.
    Tokens(TokensArgs),
    /// Build back-translation training examples from a monolingual corpus.
    PrepareBt(PrepareBtArgs),
    /// Decode input sentences with penalized beam search.
    #[command(after_help = model_spec::HELP)]
    Decode(DecodeArgs),
    /// Grid-search penalty coefficients on a validation set.
    #[command(after_help = model_spec::HELP)]
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    /// Also write the statistics as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    /// One or more reference files, line-aligned with the source.
    #[arg(long, num_args = 1.., required = true)]
    pub refs: Vec<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write per-sentence SARI and FKGL as TSV.
    #[arg(long)]
    pub per_sentence: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FreqFormatArg {
    Auto,
    Rank,
    Count,
}

#[derive(Args, Debug)]
pub struct TokensArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub tgt: PathBuf,
    /// Word frequency table: `word<TAB>rank` or `word<TAB>count` lines.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub freq_format: FreqFormatArg,
    /// Dependency depths for source lines: `line<TAB>depth`.
    #[arg(long, requires = "tgt_depths")]
    pub src_depths: Option<PathBuf>,
    /// Dependency depths for target lines: `line<TAB>depth`.
    #[arg(long, requires = "src_depths")]
    pub tgt_depths: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum DirectionArg {
    ComplexToSimple,
    SimpleToComplex,
}

#[derive(Args, Debug)]
pub struct PrepareBtArgs {
    /// Monolingual corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Token drop probability of the noising translator.
    #[arg(long, default_value_t = 0.0)]
    pub drop: f64,
    /// Maximum displacement of the local shuffle.
    #[arg(long, default_value_t = 0)]
    pub shuffle: usize,
    /// Frequency table; built from the corpus when absent.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub freq_format: FreqFormatArg,
    #[arg(long, value_enum, default_value = "complex-to-simple")]
    pub direction: DirectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Model specification (see below).
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Maximum output tokens before end-of-sequence.
    #[arg(long, default_value_t = 100)]
    pub max_len: usize,
    /// Control tokens prepended to every input line, e.g. "<NbChars_0.80> <LevSim_0.60>".
    #[arg(long)]
    pub prefix: Option<String>,
    /// Apply penalties only when ranking finished hypotheses.
    #[arg(long)]
    pub rescore: bool,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub input: PathBuf,
    /// Length penalty coefficient.
    #[arg(long)]
    pub lp: Option<f64>,
    /// Exact-match penalty coefficient.
    #[arg(long)]
    pub emp: Option<f64>,
    /// FKGL penalty coefficient.
    #[arg(long)]
    pub fkglp: Option<f64>,
    /// JSON penalty configuration (as written by `tune`); flags override it.
    #[arg(long)]
    pub penalties: Option<PathBuf>,
    /// Emit the top K hypotheses per line as TSV instead of one output per line.
    #[arg(long)]
    pub n_best: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Validation sources.
    #[arg(long)]
    pub src: PathBuf,
    /// Validation reference files, line-aligned with the sources.
    #[arg(long, num_args = 1.., required = true)]
    pub refs: Vec<PathBuf>,
    /// Values for the length coefficient: `a,b,c` or inclusive `start:stop:step`.
    #[arg(long, default_value = "0.1:1.3:0.3")]
    pub grid_length: String,
    #[arg(long, default_value = "0.1:1.3:0.3")]
    pub grid_exact: String,
    #[arg(long, default_value = "0.1:1.3:0.3")]
    pub grid_fkgl: String,
    /// Objective is SARI - beta * FKGL.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Where to write the table (default: stdout).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Where to write the best configuration as JSON.
    #[arg(long)]
    pub best: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit as u8);
    }
    let result = match &cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Eval(a) => commands::eval(a),
        Command::Tokens(a) => commands::tokens(a),
        Command::PrepareBt(a) => commands::prepare_bt(a, cli.seed),
        Command::Decode(a) => commands::decode(a),
        Command::Tune(a) => commands::tune(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
