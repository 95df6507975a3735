use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

mod cmd;
mod config;
mod resolve;
mod trace_fmt;

use config::FileConfig;

/// Backward-chaining planner for compositional multi-API requests.
#[derive(Parser, Debug)]
#[command(name = "revchain", version)]
struct Cli {
    /// TOML run configuration; flags override it, it overrides the environment
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr (-v, -vv)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan one request. Exit 0 complete, 2 waiting on user input, 1 failed
    Plan(cmd::plan::PlanArgs),
    /// Plan and grade every sample of a dataset
    Eval(cmd::eval::EvalArgs),
    /// Generate a synthetic dataset with mock environments
    Gen(cmd::gen::GenArgs),
    /// Execute a call expression against a mock environment
    Exec(cmd::exec::ExecArgs),
    /// Inspect planning traces
    #[command(subcommand)]
    Trace(cmd::trace::TraceCommand),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)))
        .with_writer(std::io::stderr)
        .init();

    let result = FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Plan(args) => cmd::plan::run(args, &file),
        Command::Eval(args) => cmd::eval::run(args, &file),
        Command::Gen(args) => cmd::gen::run(args, &file),
        Command::Exec(args) => cmd::exec::run(args),
        Command::Trace(sub) => cmd::trace::run(sub),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
