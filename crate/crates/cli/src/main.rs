use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use laminar_cli::{config, configure_workers, run, Command};

/// Certified bounds and simulations for layered media.
#[derive(Debug, Parser)]
#[command(name = "laminar", version)]
struct Args {
    command: Command,
    /// `key=value` settings; they override the config file.
    params: Vec<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; the resolved config is echoed into it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure_workers()
        .and_then(|()| config::load(args.config.as_deref(), &args.params, args.out.clone()))
        .and_then(|cfg| run(args.command, &cfg));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
