//! Command-line front end for `fairpca-core`: demo data, fitting, embedding
//! and per-group loss audits.

pub mod args;
pub mod commands;
pub mod error;
pub mod model;
pub mod synth;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::error::{EXIT_OK, EXIT_USAGE};

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    stdout.write_all(rendered.as_bytes()).ok();
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE
                    } else {
                        EXIT_OK
                    }
                }
                _ => {
                    stderr.write_all(rendered.as_bytes()).ok();
                    EXIT_USAGE
                }
            };
        }
    };
    match commands::run(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            writeln!(stderr, "fairpca: {e}").ok();
            e.exit_code()
        }
    }
}
