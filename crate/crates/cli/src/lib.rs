//! Command-line surface of the sparse-softmax experiments.
//!
//! [`run`] takes a full argument vector (program name first) and returns the
//! exit status and summary instead of exiting, so the harness is usable from
//! tests.

pub mod args;
pub mod commands;
pub mod manifest;

use std::ffi::OsString;

use anyhow::{bail, Result};
use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::commands::Outcome;
use crate::manifest::Manifest;

pub fn run<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let mut outcome = dispatch(cli.command)?;
    for f in &outcome.files {
        outcome.summary.push_str(&format!("wrote {}\n", f.display()));
    }
    Ok(outcome)
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Train(a) => commands::train_cmd(&a),
        Command::SweepK(a) => commands::sweep_cmd(&a),
        Command::VerifyBound(a) => commands::verify_cmd(&a),
        Command::GradCheck(a) => commands::grad_check_cmd(&a),
        Command::GenData(a) => commands::gen_data_cmd(&a),
        Command::Rerun(a) => {
            let manifest = Manifest::read(&a.manifest)?;
            if manifest.subcommand == "rerun" {
                bail!("manifest describes a rerun, not a run");
            }
            let cli = Cli::try_parse_from(manifest.to_args(a.out.as_deref()))?;
            dispatch(cli.command)
        }
    }
}
