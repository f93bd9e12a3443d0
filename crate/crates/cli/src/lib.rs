//! The `hsan` command line.

mod args;
mod commands;
mod paths;
mod settings;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use settings::{preset, Settings};

use args::Command;

/// Parses `argv` and runs the subcommand. Returns 0 on success, 2 on usage
/// errors and 1 on any other failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let result = match cli.command {
        Command::GenSynth(a) => commands::gen_synth(a),
        Command::BuildVocab(a) => commands::build_vocab(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Pretrain(a) => commands::pretrain_cmd(a),
        Command::Finetune(a) => commands::finetune_cmd(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Explain(a) => commands::explain_cmd(a),
        Command::Ablate(a) => commands::ablate_cmd(a),
        Command::Baseline(a) => commands::baseline_cmd(a),
        Command::Gradcheck(a) => commands::gradcheck_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
