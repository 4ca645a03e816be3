//! `seqweak`: command-line front end.

mod args;
mod commands;
mod exit;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("seqweak: --threads: {e}");
            return ExitCode::from(exit::EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Sweep(a) => commands::sweep(a),
        Command::Thresholds(a) => commands::thresholds(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Certify(a) => commands::certify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("seqweak: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
