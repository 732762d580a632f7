//! `zpcover`: build, verify and export covering families over `Z_p`.
//!
//! Exit status is 0 when every verification passed, 2 when a verification
//! failed, and 1 for usage, input or resource errors.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(commands::Outcome::Verified) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            let verification = e
                .downcast_ref::<zpcover::Error>()
                .is_some_and(|e| matches!(e, zpcover::Error::Verification { .. }));
            ExitCode::from(if verification { 2 } else { 1 })
        }
    }
}
