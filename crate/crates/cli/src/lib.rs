//! Command-line front end for `cantor-spectra-core`: potential files,
//! spectra, state densities, staircases, clusters and `mu` sweeps as CSV or
//! JSON lines, plus gnuplot scripts for the results.
//!
//! Exit codes: 0 on success, 1 when a solver does not converge or input
//! data is missing, 2 for invalid arguments, config files or potentials.

pub mod config;
pub mod error;
pub mod format;
pub mod output;
pub mod plot;
pub mod run;

use std::ffi::OsString;
use std::process::ExitCode;

pub use config::{parse_args, RunConfig};
pub use error::CliError;
pub use run::{run, run_to};

/// Parses `argv`, runs the command and reports failures on stderr.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv).and_then(|config| run(&config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(&e)
        }
    }
}

fn report(e: &CliError) {
    match e {
        CliError::Usage(clap) => {
            let _ = clap.print();
        }
        CliError::Config { subcommand, .. } => {
            eprintln!("error: {e}\n\n{}", config::usage(*subcommand));
        }
        _ => eprintln!("error: {e}"),
    }
}
