//! The `evp` command line: `curve`, `simulate`, `compare` and `weights`.
//!
//! Data goes to `--out` (or stdout); diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::combinatorics::EstimatorKind;
use crate::comparison::{comparison_report, ComparisonConfig, Side};
use crate::curves::evp_curve;
use crate::error::{invalid, EvpError, Result};
use crate::estimators::weight_vector;
use crate::io::{self, OutputFormat, ScoreFormat};
use crate::par;
use crate::rng::RandomSource;
use crate::simulation::{build_bag_two_stage, bias_variance_mse_report, Sampling, SimulationConfig, TruncatedNormal};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INDETERMINATE_TRUTH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "evp", version, about = "Expected validation performance estimators and studies")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_parser = positive)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected-maximum curve (mean and variance for n = 1..B) over a score file.
    Curve(CurveArgs),
    /// Bias / variance / MSE study on a synthetic truncated-normal bag.
    Simulate(SimulateArgs),
    /// Incorrect-conclusion rates when comparing two score pools.
    Compare(CompareArgs),
    /// Order-statistic weights for one estimator.
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selector {
    U,
    V,
    W,
    All,
}

impl Selector {
    fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            Selector::U => vec![EstimatorKind::Combinations],
            Selector::V => vec![EstimatorKind::Strings],
            Selector::W => vec![EstimatorKind::Multisets],
            Selector::All => EstimatorKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Delimited,
            Format::Json => OutputFormat::Structured,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Score file: one number per line, or CSV with a `score` column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Selector::All)]
    pub estimator: Selector,
    #[arg(long, default_value = "auto")]
    pub score_format: ScoreFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.07)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hi: f64,
    /// First-stage draws from the truncated normal.
    #[arg(long, default_value_t = 100_000, value_parser = positive)]
    pub source_count: usize,
    /// Values kept from the first stage as the working bag.
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    pub bag_size: usize,
    /// Draw the working bag with replacement instead of without.
    #[arg(long)]
    pub bag_with_replacement: bool,
    /// Trial pool size.
    #[arg(long = "B", visible_alias = "budget", default_value_t = 30, value_parser = positive)]
    pub budget: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    pub trials: usize,
    #[arg(long, default_value_t = 50_000, value_parser = positive)]
    pub truth_reps: usize,
    /// Draw trial pools without replacement instead of with.
    #[arg(long)]
    pub trials_without_replacement: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scores of the first model.
    #[arg(long)]
    pub pool_a: PathBuf,
    /// Scores of the second model.
    #[arg(long)]
    pub pool_b: PathBuf,
    /// Budgets, as `15..30` (inclusive), `15-30` or `15,20,25`.
    #[arg(long, default_value = "15..30", value_parser = parse_budgets)]
    pub budgets: Budgets,
    #[arg(long, default_value_t = 50_000, value_parser = positive)]
    pub resamples: usize,
    /// Which pool is truly better, overriding the full-pool estimate.
    #[arg(long)]
    pub truth: Option<Side>,
    /// Subsample with replacement instead of without.
    #[arg(long)]
    pub with_replacement: bool,
    #[arg(long, default_value = "auto")]
    pub score_format: ScoreFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long, value_enum)]
    pub estimator: Selector,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "B", visible_alias = "budget")]
    pub budget: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budgets(pub Vec<usize>);

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_budgets(s: &str) -> std::result::Result<Budgets, String> {
    let s = s.trim();
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    let budgets = if let Some((lo, hi)) = range {
        let lo = positive(lo.trim())?;
        let hi = positive(hi.trim_start_matches('=').trim())?;
        (lo..=hi).collect()
    } else if s.is_empty() {
        Vec::new()
    } else {
        s.split(',').map(|p| positive(p.trim())).collect::<std::result::Result<_, _>>()?
    };
    Ok(Budgets(budgets))
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = cli.threads;
    match par::with_threads(threads, || execute(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("evp: {e}");
            match e {
                EvpError::IndeterminateTruth { .. } => EXIT_INDETERMINATE_TRUTH,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Curve(args) => cmd_curve(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Weights(args) => cmd_weights(&args),
    }
}

pub fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let pool = io::read_scores_file(&args.input, args.score_format)?;
    let curves = args
        .estimator
        .kinds()
        .into_iter()
        .map(|k| evp_curve(k, &pool))
        .collect::<Result<Vec<_>>>()?;
    emit(&args.output, &io::write_curves(&curves, args.output.format.into())?)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let params = TruncatedNormal {
        mu: args.mu,
        sigma: args.sigma,
        lo: args.lo,
        hi: args.hi,
    };
    let root = RandomSource::new(args.seed);
    let bag_sampling = if args.bag_with_replacement {
        Sampling::WithReplacement
    } else {
        Sampling::WithoutReplacement
    };
    let bag = build_bag_two_stage(args.source_count, args.bag_size, &params, bag_sampling, &root.substream(0))?;
    let config = SimulationConfig {
        b: args.budget,
        trials: args.trials,
        truth_reps: args.truth_reps,
        sampling: if args.trials_without_replacement {
            Sampling::WithoutReplacement
        } else {
            Sampling::WithReplacement
        },
    };
    let report = bias_variance_mse_report(&bag, &config, &root.substream(1))?;
    emit(&args.output, &io::write_simulation_report(&report, args.output.format.into())?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let a = io::read_scores_file(&args.pool_a, args.score_format)?;
    let b = io::read_scores_file(&args.pool_b, args.score_format)?;
    let config = ComparisonConfig {
        budgets: args.budgets.0.clone(),
        resamples: args.resamples,
        sampling: if args.with_replacement {
            Sampling::WithReplacement
        } else {
            Sampling::WithoutReplacement
        },
        truth_override: args.truth,
    };
    let report = comparison_report(&a, &b, &config, &RandomSource::new(args.seed))?;
    emit(&args.output, &io::write_comparison_report(&report, args.output.format.into())?)
}

pub fn cmd_weights(args: &WeightsArgs) -> Result<()> {
    let kind = match args.estimator.kinds().as_slice() {
        [k] => *k,
        _ => return Err(invalid("weights needs a single estimator (u, v or w)")),
    };
    let w = weight_vector(kind, args.n, args.budget)?;
    emit(&args.output, &io::write_weights(&w, args.output.format.into())?)
}

fn emit(output: &OutputArgs, bytes: &[u8]) -> Result<()> {
    match &output.out {
        Some(path) => write_atomically(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

// Writes next to the target and renames, so a failed run never leaves a partial file.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_err = |source| EvpError::File {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(file_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        file_err(e)
    })
}
