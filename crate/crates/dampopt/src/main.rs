use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dampopt::config::RunConfig;
use dampopt::{output, sweep, CliError, Result};

/// Locally optimal viscous damper gains by H∞ minimization on a reduced model.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allow n > 200 systems and full-size oracle runs.
    #[arg(long)]
    long: bool,
    /// Worker threads for sweep rows.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Log per-iteration traces.
    #[arg(long, short)]
    verbose: bool,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cfg = cfg.resolve(args.long)?;
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let rows = cfg.rows()?;
    let results = sweep::run_sweep(&cfg, &rows, args.jobs, args.long)?;
    output::write_all(&out, &cfg, &results)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    log::info!("{} rows, {failed} failed; results in {}", results.len(), out.display());
    if failed > 0 {
        return Err(CliError::RowsFailed { failed, total: results.len() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
