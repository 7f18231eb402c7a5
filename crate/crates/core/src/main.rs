use clap::Parser;
use sphere_langevin::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}
