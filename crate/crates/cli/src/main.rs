//! `fieldspec`: reconstruction, sweeps, spectral ensembles and exact moments from the
//! command line. Every run writes CSV/JSON into `--out` together with `manifest.json`.

mod commands;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fieldspec::io::{write_json, FORMAT_VERSION};
use fieldspec::Support;
use serde::Serialize;
use serde_json::{json, Value};
use tracing_subscriber::EnvFilter;

/// Exit code for a reconstruction rejected because the system is ill-conditioned.
pub const EXIT_ILL_CONDITIONED: u8 = 2;

#[derive(Debug, Parser, Serialize)]
#[command(name = "fieldspec", version, about = "Irregular sampling of bandlimited fields")]
struct Cli {
    /// Master seed; every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "fieldspec-out")]
    out: PathBuf,

    /// Worker threads for ensembles and sweeps (default: all cores).
    #[arg(long, global = true, env = "FIELDSPEC_THREADS")]
    threads: Option<usize>,

    /// Emit logs as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
enum Command {
    /// Reconstruct one signal from generated or supplied samples.
    Reconstruct(ReconstructArgs),
    /// Success probability over a grid of (M, r).
    Sweep(SweepArgs),
    /// Monte Carlo eigenvalue ensemble of the sampling matrix.
    Spectrum(SpectrumArgs),
    /// Exact moment polynomials and the simulation/finite/limit table.
    Moments(MomentsArgs),
    /// Preconditioned condition numbers against the gap bound.
    PrecondCheck(PrecondArgs),
}

#[derive(Debug, Args, Serialize)]
struct ReconstructArgs {
    /// Number of harmonics M.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    harmonics: usize,
    /// Number of generated samples; ignored with --samples.
    #[arg(long)]
    r: Option<usize>,
    /// Sensor support `lo:hi` for generated samples.
    #[arg(long, default_value_t = Support::UNIT)]
    support: Support,
    /// Equally spaced samples instead of random ones.
    #[arg(long, conflicts_with = "samples")]
    regular: bool,
    /// CSV of samples (`t,value_re,value_im`) to reconstruct instead of a generated signal.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Solve the preconditioned system.
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = fieldspec::linsys::DEFAULT_KAPPA_MAX)]
    kappa_max: f64,
    /// Points of the evaluation grid in `reconstruction.csv`.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long = "M-list", value_delimiter = ',', required = true)]
    #[serde(rename = "M_list")]
    harmonics: Vec<usize>,
    #[arg(long = "r-list", value_delimiter = ',', required = true)]
    #[serde(rename = "r_list")]
    samples: Vec<usize>,
    #[arg(long, default_value_t = Support::UNIT)]
    support: Support,
    #[arg(long)]
    regular: bool,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = fieldspec::linsys::DEFAULT_KAPPA_MAX)]
    kappa_max: f64,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    harmonics: usize,
    /// Target ratio (2M+1)/r; r is rounded.
    #[arg(long, required_unless_present = "r", conflicts_with = "r")]
    beta: Option<f64>,
    /// Explicit sample count instead of --beta.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Linear bin width of `pdf.csv`.
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    /// Logarithmic bins per decade.
    #[arg(long, default_value_t = fieldspec::spectral::LOG_BINS_PER_DECADE)]
    bins_per_decade: usize,
    /// Also dump every eigenvalue to `eigenvalues.csv`.
    #[arg(long)]
    eigenvalues: bool,
    /// Compare the minimum-eigenvalue cdf with (2M+1) times the pooled cdf.
    #[arg(long)]
    check_min_bound: bool,
    /// Fit the small-x power law of the pooled cdf.
    #[arg(long)]
    fit_tail: bool,
    #[arg(long, default_value_t = fieldspec::spectral::DEFAULT_TAIL_ANCHOR)]
    tail_anchor: f64,
    /// Compare the log-κ density with the mirrored minimum-eigenvalue density.
    #[arg(long)]
    mirror: bool,
    #[arg(long, default_value_t = fieldspec::spectral::DEFAULT_MIRROR_D)]
    mirror_d: f64,
}

#[derive(Debug, Args, Serialize)]
struct MomentsArgs {
    #[arg(long, default_value_t = 5)]
    p_max: usize,
    /// Values of β at which the polynomials are evaluated.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    betas: Vec<f64>,
    /// Also write `table1.csv` comparing simulation, finite-size and limit values.
    #[arg(long)]
    table1: bool,
    #[arg(long = "M", default_value_t = 200)]
    #[serde(rename = "M")]
    harmonics: usize,
    /// Monte Carlo trials per β for the table; 0 skips the simulation column.
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

#[derive(Debug, Args, Serialize)]
struct PrecondArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    harmonics: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 500)]
    topologies: usize,
    #[arg(long, default_value_t = Support::UNIT)]
    support: Support,
    /// Redraw each topology until its maximum gap is below 1/(2M).
    #[arg(long)]
    require_hypothesis: bool,
}

/// What a command produced: its exit code, the files it wrote and derived values
/// echoed into the manifest.
pub struct Outcome {
    pub exit: u8,
    pub files: Vec<String>,
    pub derived: Value,
}

fn init_logging(json: bool) {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal());
    if json {
        builder.json().init();
    } else {
        builder.init();
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let outcome = match &cli.command {
        Command::Reconstruct(a) => commands::reconstruct(a, cli.seed, &cli.out)?,
        Command::Sweep(a) => commands::sweep(a, cli.seed, &cli.out)?,
        Command::Spectrum(a) => commands::spectrum(a, cli.seed, &cli.out)?,
        Command::Moments(a) => commands::moments(a, cli.seed, &cli.out)?,
        Command::PrecondCheck(a) => commands::precond_check(a, cli.seed, &cli.out)?,
    };
    let manifest = json!({
        "format_version": FORMAT_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "argv": std::env::args().collect::<Vec<_>>(),
        "config": cli,
        "threads": rayon::current_num_threads(),
        "derived": outcome.derived,
        "files": outcome.files,
        "exit_code": outcome.exit,
    });
    write_json(&cli.out.join("manifest.json"), &manifest)?;
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.json_logs);
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
