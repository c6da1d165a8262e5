//! `tailcop` command-line tool.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{
    AggregateArgs, BandArgs, BootstrapArgs, CompositeArgs, DensityGridArgs, EmpiricalArgs, FitArgs,
    MapArgs, SimulateArgs,
};
use crate::config::ConfigFile;
use crate::output::{write_error_artifact, Context};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "TAILCOP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "tailcop",
    version,
    about = "Four-corner tail dependence analysis"
)]
struct Cli {
    /// Seed for every random draw (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw pairs from a fitted or hand-written mixture.
    Simulate(SimulateArgs),
    /// Fit the four-corner mixture to a pair of series.
    Fit(FitArgs),
    /// Empirical tail coefficients, correlation and bin counts.
    Empirical(EmpiricalArgs),
    /// Dependence between a base gridbox and every other box.
    Map(MapArgs),
    /// Dependence between all boxes of two latitude bands.
    Band(BandArgs),
    /// Average a field over the days counted in one corner.
    Composite(CompositeArgs),
    /// Year-block bootstrap interval for the fitted tail matrix.
    Bootstrap(BootstrapArgs),
    /// Mixture log density on a grid, optionally in data units.
    DensityGrid(DensityGridArgs),
    /// Land-averaged gridbox series from gridded data.
    Aggregate(AggregateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Empirical(_) => "empirical",
            Command::Map(_) => "map",
            Command::Band(_) => "band",
            Command::Composite(_) => "composite",
            Command::Bootstrap(_) => "bootstrap",
            Command::DensityGrid(_) => "density-grid",
            Command::Aggregate(_) => "aggregate",
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().map_err(|_| {
            anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{raw}`")
        })?;
        if n == 0 {
            anyhow::bail!("{THREADS_ENV} must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli, ctx: &Context, config: &ConfigFile) -> anyhow::Result<()> {
    configure_threads()?;
    let name = cli.command.name();
    match &cli.command {
        Command::Simulate(a) => commands::simulate(ctx, &config.resolve(name, a)?),
        Command::Fit(a) => commands::fit(ctx, &config.resolve(name, a)?),
        Command::Empirical(a) => commands::empirical(ctx, &config.resolve(name, a)?),
        Command::Map(a) => commands::map(ctx, &config.resolve(name, a)?),
        Command::Band(a) => commands::band(ctx, &config.resolve(name, a)?),
        Command::Composite(a) => commands::composite(ctx, &config.resolve(name, a)?),
        Command::Bootstrap(a) => commands::bootstrap(ctx, &config.resolve(name, a)?),
        Command::DensityGrid(a) => commands::density_grid(ctx, &config.resolve(name, a)?),
        Command::Aggregate(a) => commands::aggregate(ctx, &config.resolve(name, a)?),
    }
}

// Best-effort output directory for failures that happen before the
// arguments are understood.
fn raw_out_dir() -> PathBuf {
    let args: Vec<String> = std::env::args().collect();
    for (i, a) in args.iter().enumerate() {
        if let Some(v) = a.strip_prefix("--out=") {
            return PathBuf::from(v);
        }
        if a == "--out" {
            if let Some(v) = args.get(i + 1) {
                return PathBuf::from(v);
            }
        }
    }
    PathBuf::from(".")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version requests
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let out = raw_out_dir();
            write_error_artifact(&out, None, &anyhow::anyhow!(e.to_string()));
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    let setup = || -> anyhow::Result<(Context, ConfigFile)> {
        let config = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let out = match &cli.out {
            Some(o) => o.clone(),
            None => config.out()?.unwrap_or_else(|| PathBuf::from(".")),
        };
        let seed = match cli.seed {
            Some(s) => s,
            None => config.seed()?.unwrap_or(0),
        };
        Ok((Context::new(out, seed)?, config))
    };
    let (ctx, config) = match setup() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            write_error_artifact(&out, Some(name), &e);
            return ExitCode::FAILURE;
        }
    };
    ctx.clear_error_artifact();
    match run(&cli, &ctx, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            write_error_artifact(&ctx.out, Some(name), &e);
            ExitCode::FAILURE
        }
    }
}
