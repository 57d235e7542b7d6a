//! Command-line harness for the alpha-loss experiments.
//!
//! Every command writes one CSV (landscape writes two) and a
//! `<out>.manifest.json` describing the run.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use chrono::Utc;

use args::{Cli, Command};
use error::CliResult;
use output::RunManifest;

/// Runs a parsed command and writes its manifest.
pub fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    let started = Utc::now();
    let command = cli.command;
    let produced = match &command {
        Command::Train(a) => commands::train_cmd(a)?,
        Command::Sweep(a) => commands::sweep_cmd(a)?,
        Command::Calibration(a) => commands::calibration_cmd(a)?,
        Command::Landscape(a) => commands::landscape_cmd(a)?,
        Command::Losscurves(a) => commands::losscurves_cmd(a)?,
    };
    let mut manifest = RunManifest::new(&command, argv, started);
    manifest.outputs = produced.outputs;
    manifest.notes = produced.notes;
    manifest.finish(command.out())?;
    Ok(())
}
