use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = vidsum_cli::Cli::parse();
    match vidsum_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(vidsum_cli::exit_code(e.kind()))
        }
    }
}
