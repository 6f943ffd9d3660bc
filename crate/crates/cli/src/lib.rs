//! Command-line driver for the alerta pipeline.
//!
//! Every command writes its artifacts and a `<command>.manifest.json` run
//! record into the output directory (`--out-dir`, or `ALERTA_OUT_DIR`).

pub mod args;
pub mod commands;
pub mod manifest;
pub mod report;

use std::ffi::OsString;

use anyhow::Result;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::Outcome;
use crate::manifest::RunRecorder;

/// Run a parsed command line. `argv` is only recorded in the manifest.
pub fn run(cli: &Cli, argv: Vec<String>) -> Result<Outcome> {
    let out = cli.out_dir.as_path();
    std::fs::create_dir_all(out)?;
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Prepare(_) => "prepare",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Ablate(_) => "ablate",
        Command::Baseline(_) => "baseline",
    };
    let mut rec = RunRecorder::start(out, name, argv);
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(out, a, &mut rec),
        Command::Prepare(a) => commands::prepare(out, a, &mut rec),
        Command::Train(a) => commands::train_cmd(out, a, &mut rec),
        Command::Eval(a) => commands::eval_cmd(out, a, &mut rec),
        Command::Ablate(a) => commands::ablate(out, a, &mut rec),
        Command::Baseline(a) => commands::baseline(out, a, &mut rec),
    };
    let warnings = rec.warnings().to_vec();
    match result {
        Ok((stdout, artifacts)) => {
            rec.finish()?;
            Ok(Outcome {
                stdout,
                warnings,
                artifacts,
            })
        }
        Err(e) => {
            rec.fail(format!("{e:#}"));
            // the command error matters more than a failure to record it
            if let Err(m) = rec.finish() {
                log::warn!("could not write run manifest: {m:#}");
            }
            Err(e)
        }
    }
}

/// Parse `args` (program name first) and run.
pub fn run_args<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&raw)?;
    run(&cli, raw.iter().map(|a| a.to_string_lossy().into_owned()).collect())
}
