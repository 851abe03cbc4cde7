mod artifact;
mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use polarity_core::coupling::ReturnMode;
use polarity_core::polarity::MantimeMode;

use commands::{Ctx, SynthArgs};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "polarity", version, about = "Order-flow polarity analytics")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    transactions: Option<PathBuf>,
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true)]
    eod: Option<PathBuf>,
    #[arg(long, global = true)]
    intraday: Option<PathBuf>,
    #[arg(long, global = true)]
    emotion: Option<PathBuf>,
    #[arg(long, global = true)]
    capitalization: Option<PathBuf>,
    #[arg(long, global = true)]
    delimiter: Option<char>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    index_id: Option<String>,
    #[arg(long, global = true, value_parser = parse_mantime)]
    mantime_mode: Option<MantimeMode>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    #[arg(long, global = true)]
    pseudo_count: Option<f64>,
    #[arg(long, global = true)]
    min_aligned_bars: Option<usize>,
    #[arg(long, global = true)]
    min_fit_samples: Option<usize>,
    #[arg(long, global = true)]
    xmin_quantile: Option<f64>,
    #[arg(long, global = true)]
    max_lag: Option<usize>,
    #[arg(long, global = true)]
    granger_min_obs: Option<usize>,
    #[arg(long, global = true, value_parser = parse_return_mode)]
    return_mode: Option<ReturnMode>,
    #[arg(long, global = true)]
    pre_crash_end: Option<NaiveDate>,
    #[arg(long, global = true)]
    crash_end: Option<NaiveDate>,
}

fn parse_mantime(s: &str) -> Result<MantimeMode, String> {
    toml::Value::String(s.into()).try_into().map_err(|_| format!("unknown man-times mode '{s}'"))
}

fn parse_return_mode(s: &str) -> Result<ReturnMode, String> {
    toml::Value::String(s.into()).try_into().map_err(|_| format!("expected vs-prev-minute or vs-prev-close, got '{s}'"))
}

#[derive(Subcommand)]
enum Command {
    /// Parse transactions and write the binary cache
    Ingest,
    /// Per stock-minute polarity panel and its moments
    Polarity,
    /// Share of positive, negative and zero minutes per stock and period
    Ratios,
    /// Daily flip counts and depth
    Flips,
    /// Same-sign run lengths
    Runlengths,
    /// Discrete power-law fit and burstiness
    Fit {
        /// One positive integer per line; defaults to the panel's run lengths
        #[arg(long)]
        sample: Option<PathBuf>,
    },
    /// Market polarity against the index
    Market,
    /// Day-over-day KL divergence of stock correlation distributions
    Kl,
    /// Granger causality between market polarity and index returns
    Granger,
    /// Return distribution grouped by polarity sign
    Impact,
    /// Correlation of index-low polarity with an external sentiment series
    Emotion,
    /// Generate a synthetic scenario or power-law sample
    Synth {
        #[arg(long)]
        power_law_alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        xmin: u32,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        stocks: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
    },
    /// Self-checks against independent oracles
    Verify {
        #[arg(long)]
        quick: bool,
    },
    /// Print the resolved configuration
    Config,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = &cli.out {
        c.output_dir = v.clone();
    }
    macro_rules! set {
        ($($src:ident => $($dst:ident).+),* $(,)?) => {
            $(if let Some(v) = &o.$src { c.$($dst).+ = v.clone().into(); })*
        };
    }
    set!(
        transactions => input.transactions,
        cache => input.cache,
        eod => input.eod,
        intraday => input.intraday,
        emotion => input.emotion,
        capitalization => input.capitalization,
        seed => seed,
        index_id => analysis.index_id,
        mantime_mode => analysis.mantime_mode,
        bins => analysis.bins,
        pseudo_count => analysis.pseudo_count,
        min_aligned_bars => analysis.min_aligned_bars,
        min_fit_samples => analysis.min_fit_samples,
        xmin_quantile => analysis.xmin_quantile,
        max_lag => analysis.max_lag,
        granger_min_obs => analysis.granger_min_obs,
        return_mode => analysis.return_mode,
        pre_crash_end => periods.pre_crash_end,
        crash_end => periods.crash_end,
    );
    if let Some(d) = o.delimiter {
        c.schema.delimiter = d;
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = resolve(&cli)?;
    let ctx = Ctx { hash: cfg.hash(), cfg };
    let written = match &cli.command {
        Command::Ingest => commands::ingest(&ctx)?,
        Command::Polarity => commands::polarity(&ctx)?,
        Command::Ratios => commands::ratios(&ctx)?,
        Command::Flips => commands::flips(&ctx)?,
        Command::Runlengths => commands::runlengths(&ctx)?,
        Command::Fit { sample } => commands::fit(&ctx, sample.as_deref())?,
        Command::Market => commands::market(&ctx)?,
        Command::Kl => commands::kl(&ctx)?,
        Command::Granger => commands::granger(&ctx)?,
        Command::Impact => commands::impact(&ctx)?,
        Command::Emotion => commands::emotion(&ctx)?,
        Command::Synth { power_law_alpha, xmin, n, stocks, days } => commands::synth_cmd(
            &ctx,
            &SynthArgs { power_law_alpha: *power_law_alpha, xmin: *xmin, n: *n, stocks: *stocks, days: *days },
        )?,
        Command::Verify { quick } => {
            let (written, ok) = commands::verify_cmd(&ctx, *quick)?;
            for p in &written {
                eprintln!("wrote {}", p.display());
            }
            if !ok {
                return Err(CliError::Numeric("one or more checks failed".into()));
            }
            return Ok(true);
        }
        Command::Config => {
            let text = toml::to_string(&ctx.cfg).map_err(|e| CliError::Config(e.to_string()))?;
            let mut w = std::io::stdout().lock();
            let _ = writeln!(w, "{text}# config_sha256 = \"{}\"", ctx.hash);
            Vec::new()
        }
    };
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
