use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kawahara_cli::config::help_text;
use kawahara_cli::output::to_json;
use kawahara_cli::{parse_config, run, thread_cap, CliError, Command, THREADS_VAR};
use serde_json::json;

#[derive(Parser)]
#[command(name = "kawahara", version, about = "Kawahara equation with delayed boundary feedback", after_help = help_text())]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// key=value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the `seed` key
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Time integration: timeseries.csv, snapshots.csv, summary.json
    Simulate(Common),
    /// Decay certificate: certificate.json
    Certificate(Common),
    /// Root, Möbius and rank tests on an (r, L) grid: scan.csv
    SpectralScan(Common),
    /// Critical lengths with steady-state checks: hits.json
    CriticalSet(Common),
    /// Empirical observability constant: observability.json
    Observability(Common),
    /// Manufactured-solution order study: orders.json
    Convergence(Common),
}

fn split(sub: Sub) -> (Command, Common) {
    match sub {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Certificate(c) => (Command::Certificate, c),
        Sub::SpectralScan(c) => (Command::SpectralScan, c),
        Sub::CriticalSet(c) => (Command::CriticalSet, c),
        Sub::Observability(c) => (Command::Observability, c),
        Sub::Convergence(c) => (Command::Convergence, c),
    }
}

fn execute(cmd: Command, args: Common) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap(std::env::var(THREADS_VAR).ok().as_deref())? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    pool.install(|| run(cmd, &cfg, &args.out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprint!("{}", to_json(&json!({"error": {"kind": "usage", "message": msg.trim_end()}})));
            return ExitCode::from(2);
        }
    };
    let (cmd, args) = split(cli.command);
    match execute(cmd, args) {
        Ok(files) => {
            print!("{}", to_json(&json!({"command": cmd.name(), "files": files})));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{}", to_json(&e.to_json()));
            ExitCode::from(if matches!(e, CliError::Config(_)) { 2 } else { 1 })
        }
    }
}
