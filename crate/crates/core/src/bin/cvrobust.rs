use clap::Parser;
use cvrobust::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    run(&Cli::parse())
}
