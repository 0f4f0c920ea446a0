use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use causticlab_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let outcome = run(&cli);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stdout.flush();
    ExitCode::from(outcome.code as u8)
}
