use std::process::ExitCode;

use clap::Parser;
use rfseek::cli::{execute, Cli, RunSpec};
use rfseek::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match RunSpec::from_cli(cli) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("rfseek: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&spec) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e @ Error::Usage(_)) => {
            eprintln!("rfseek: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("rfseek: {e}");
            ExitCode::FAILURE
        }
    }
}
