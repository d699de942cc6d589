use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use isac_cli::table::write_output;
use isac_cli::{run, CliError, Command, RunConfig};

/// Rate versus MSE-decay tradeoff toolkit.
#[derive(Debug, Parser)]
#[command(name = "isac", version)]
struct Args {
    /// JSON run configuration; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file, overriding output.path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding sim.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn execute(args: &Args) -> Result<String, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    let outcome = run(args.command, &cfg)?;
    let path = args
        .out
        .clone()
        .or_else(|| cfg.output.path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", args.command, cfg.output.format.extension())));
    write_output(&path, cfg.output.format, &outcome.table, outcome.json.as_ref())?;
    Ok(format!("{} -> {}", outcome.summary, path.display()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
