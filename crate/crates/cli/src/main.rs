mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Certify(a) => commands::certify(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::EcNorm(a) => commands::ec_norm(a),
        Command::Lemmas(a) => commands::lemmas(a),
        Command::Catalog(a) => commands::catalog_command(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bqms: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
