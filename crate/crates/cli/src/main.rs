//! Command-line driver: translate corpora between styles, compute channel
//! statistics, measure domain gaps, and run the built-in verification suite.
//!
//! Exit codes: 0 on success, 1 on runtime failure (including runs where any
//! file failed and failed verification checks), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use styleshift_core::metrics::gap_report;
use styleshift_core::pipeline::{
    build_style_bank, execute_plan, make_plan, scan_corpus, write_bank, Pairing, PlanParams,
    TranslateMode,
};
use styleshift_core::selfcheck;

/// Overrides the worker default when `--workers` is not given.
const WORKERS_ENV: &str = "STYLESHIFT_WORKERS";

#[derive(Parser)]
#[command(
    name = "styleshift",
    version,
    about = "Frequency- and statistics-based image style adaptation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate every source image toward the target corpus style.
    Translate(TranslateArgs),
    /// Compute per-image and aggregate channel statistics for a corpus.
    Stats(StatsArgs),
    /// Measure the statistic and spectral gap between two corpora.
    Gap(GapArgs),
    /// Run the built-in self-verification suite.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Swap low-frequency amplitudes, keep source phase.
    Fda,
    /// Shift channel means onto the target's.
    Rgb,
    /// Match channel means and deviations to the target's.
    Sain,
}

impl From<ModeArg> for TranslateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fda => TranslateMode::Fda,
            ModeArg::Rgb => TranslateMode::Rgb,
            ModeArg::Sain => TranslateMode::Sain,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    /// Each source image draws a seeded random target image.
    RandomSeeded,
    /// Source i pairs with target (i mod target count).
    RoundRobin,
    /// Every source uses the target corpus aggregate (rgb mode only).
    DatasetMean,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::RandomSeeded => Pairing::RandomSeeded,
            PairingArg::RoundRobin => Pairing::RoundRobin,
            PairingArg::DatasetMean => Pairing::DatasetMean,
        }
    }
}

#[derive(Args)]
struct TranslateArgs {
    /// Directory of images to translate.
    #[arg(long)]
    source: PathBuf,
    /// Directory of style reference images.
    #[arg(long)]
    target: PathBuf,
    /// Output directory (created if needed); relative paths are preserved.
    #[arg(long)]
    out: PathBuf,
    /// Transform to apply.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// How source images pick their style reference.
    #[arg(long, value_enum, default_value = "random-seeded")]
    pairing: PairingArg,
    /// Relative size of the swapped low-frequency window (fda mode).
    #[arg(long, default_value_t = 0.01, value_parser = parse_beta)]
    beta: f64,
    /// Variance regularizer (sain mode and bank statistics).
    #[arg(long, default_value_t = 1e-5, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Seed for the pairing generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker thread count [default: logical CPUs, or STYLESHIFT_WORKERS].
    #[arg(long, value_parser = parse_workers)]
    workers: Option<usize>,
    /// Clamp out-of-range samples into [0, 1] when writing 8-bit images
    /// instead of failing the file.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Directory of images to analyze.
    #[arg(long)]
    source: PathBuf,
    /// File to write the statistics bank to.
    #[arg(long)]
    out: PathBuf,
    /// Variance regularizer folded into every deviation.
    #[arg(long, default_value_t = 1e-5, value_parser = parse_epsilon)]
    epsilon: f64,
}

#[derive(Args)]
struct GapArgs {
    /// First corpus directory.
    #[arg(long)]
    source: PathBuf,
    /// Second corpus directory.
    #[arg(long)]
    target: PathBuf,
    /// Relative size of the low-frequency window to compare.
    #[arg(long, default_value_t = 0.01, value_parser = parse_beta)]
    beta: f64,
    /// Variance regularizer for the statistics banks.
    #[arg(long, default_value_t = 1e-5, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Seed for the spectral pair sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_beta(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("beta must be in [0, 1], got {raw}"))
    }
}

fn parse_epsilon(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("epsilon must be finite and positive, got {raw}"))
    }
}

fn parse_workers(raw: &str) -> Result<usize, String> {
    let v: usize = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a positive integer"))?;
    if v == 0 {
        Err("worker count must be at least 1".to_string())
    } else {
        Ok(v)
    }
}

enum Failure {
    Usage(String),
    Runtime(styleshift_core::Error),
}

impl From<styleshift_core::Error> for Failure {
    fn from(e: styleshift_core::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        return parse_workers(raw.trim())
            .map_err(|e| Failure::Usage(format!("{WORKERS_ENV}: {e}")));
    }
    Ok(std::thread::available_parallelism()
        .map(std::num::NonZeroUsize::get)
        .unwrap_or(1))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Translate(args) => translate(args),
        Command::Stats(args) => stats(args),
        Command::Gap(args) => gap(args),
        Command::Verify => Ok(verify()),
    }
}

fn translate(args: TranslateArgs) -> Result<ExitCode, Failure> {
    let workers = resolve_workers(args.workers)?;
    let source = scan_corpus(&args.source)?;
    let target = scan_corpus(&args.target)?;
    let params = PlanParams {
        beta: args.beta,
        epsilon: args.epsilon,
        clamp: args.clamp,
    };
    let plan = make_plan(
        &source,
        &target,
        args.mode.into(),
        args.pairing.into(),
        args.seed,
        params,
    )?;
    let report = execute_plan(&plan, &args.out, workers)?;
    print!("{}", report.render());
    if report.failed_count() > 0 {
        eprintln!(
            "{} of {} files failed",
            report.failed_count(),
            report.entries().len()
        );
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn stats(args: StatsArgs) -> Result<ExitCode, Failure> {
    let corpus = scan_corpus(&args.source)?;
    let bank = build_style_bank(&corpus, args.epsilon)?;
    write_bank(&bank, &args.out)?;
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    println!("images = {}", bank.per_image().len());
    println!("aggregate_mean = {}", join(bank.aggregate().means()));
    println!("aggregate_std = {}", join(bank.aggregate().stds()));
    println!("bank = {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn gap(args: GapArgs) -> Result<ExitCode, Failure> {
    let source = scan_corpus(&args.source)?;
    let target = scan_corpus(&args.target)?;
    // Enough draws to touch the larger corpus once on average, capped so
    // huge datasets stay cheap to probe.
    let samples = source.len().max(target.len()).min(128);
    let report = gap_report(
        &source,
        &target,
        args.beta,
        args.epsilon,
        samples,
        args.seed,
    )?;
    println!("beta = {}", args.beta);
    println!("epsilon = {}", args.epsilon);
    print!("{}", report.render());
    Ok(ExitCode::SUCCESS)
}

fn verify() -> ExitCode {
    let checks = selfcheck::run_all();
    let mut failed = 0;
    for check in &checks {
        match &check.result {
            Ok(()) => println!("check {}: ok", check.name),
            Err(message) => {
                failed += 1;
                println!("check {}: FAILED ({message})", check.name);
            }
        }
    }
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
