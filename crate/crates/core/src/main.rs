use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use vanet_sim::cli::{run, Args};

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // Usage problems are configuration errors; exit code 2 is reserved for I/O.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vanet-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
