use std::process::ExitCode;

use clap::Parser;
use netsense_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli))
}
