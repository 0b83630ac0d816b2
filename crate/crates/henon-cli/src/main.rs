mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{ConfigError, ExperimentConfig};
use output::Output;

#[derive(Parser)]
#[command(name = "henon-lab", version, about = "Renormalization experiments on Henon-like maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tower depth; overrides the configured one.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sampling seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the renormalization tower and per-level norms.
    Renormalize,
    /// Sample the critical Cantor set and its periodic approximants.
    Cantor,
    /// Average Jacobian, distortion, universal profile and tilts.
    Universality,
    /// Invariant surface, rescaling and embedded planar maps.
    Surface,
    /// Sibling-box geometry over the b-grid.
    Geometry,
    /// Accumulation parameter and average Jacobian over the b-grid.
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError::Invalid("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(d) = cli.depth {
        cfg.depth = d;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let cfg = load(cli)?;
    if let Some(k) = cli.jobs {
        if k == 0 {
            return Err(ConfigError::Invalid("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    // The output directory does not change the results, so it stays out of the hash.
    let mut hashed = cfg.clone();
    hashed.output = PathBuf::new();
    let mut out = Output::new(&cfg.output, hashed.hash())?;
    out.json("config.json", &cfg)?;
    let result = match cli.command {
        Command::Renormalize => commands::renormalize(&cfg, &mut out),
        Command::Cantor => commands::cantor(&cfg, &mut out),
        Command::Universality => commands::universality(&cfg, &mut out),
        Command::Surface => commands::surface(&cfg, &mut out),
        Command::Geometry => commands::geometry(&cfg, &mut out),
        Command::Sweep => commands::sweep(&cfg, &mut out),
    };
    result.map(|_| out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("henon-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
