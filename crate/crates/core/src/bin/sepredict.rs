use std::process::ExitCode;

use clap::Parser;
use sepredict::cli::{run, Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            if let CliError::Gaps(gaps) = &err {
                for g in gaps {
                    eprintln!("gap\t{}\t{}", g.prescription, g.drug);
                }
            }
            eprintln!("{}", err.diagnostic());
            ExitCode::FAILURE
        }
    }
}
