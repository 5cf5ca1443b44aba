use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use decaylab_cli::{run, CliError, RunConfig, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "decaylab", version, about = "Decay-of-correlation diagnostics for expanding semiflows")]
struct Args {
    /// check | uni | spectrum | dolgopyat | cone | correlate | laplace | skew | lorenz
    subcommand: String,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "decaylab-out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let sub: Subcommand = args.subcommand.parse()?;
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    cfg.validate()?;
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let outcome = run(sub, &cfg)?;
    let files = outcome.write(&cfg, &args.out)?;
    println!("{} {}", sub.name(), if outcome.passed() { "PASS" } else { "FAIL" });
    for f in &outcome.failures {
        println!("  failed: {f}");
    }
    for f in files {
        println!("  wrote {}", f.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = execute(&args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
