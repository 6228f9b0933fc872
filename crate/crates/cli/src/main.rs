use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use vinelogit_cli::args::{Cli, Command};
use vinelogit_cli::commands;
use vinelogit_cli::error::{CliError, CliResult};

const THREADS_VAR: &str = "VINELOGIT_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_VAR}: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Fit(a) => commands::fit(a, &mut out),
        Command::Predict(a) => commands::predict(a, &mut out),
        Command::Simulate(a) => commands::simulate(a, &mut out),
        Command::Bench(a) => commands::bench(a, &mut out),
    }?;
    out.flush().map_err(CliError::io("<stdout>"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
