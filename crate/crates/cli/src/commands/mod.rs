//! Subcommand implementations. Each `run` returns `Ok(())` after writing its
//! declared outputs; human-readable summaries go to stderr.

pub mod caption;
pub mod dataset;
pub mod eval;
pub mod extract;
pub mod paths;
pub mod predict;
pub mod train;

use crate::args::Command;
use crate::{read_text, CliError};
use prigen_core::nmt::{decode_beam, encode_contexts, Checkpoint, EncodedExample};
use prigen_core::permdb::ApiDb;
use std::path::Path;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Extract(args) => extract::run(&args),
        Command::Paths(args) => paths::run(&args),
        Command::Dataset(args) => dataset::run(&args),
        Command::Train(args) => train::run(&args),
        Command::Predict(args) => predict::run(&args),
        Command::Caption(args) => caption::run(&args),
        Command::Eval(args) => eval::run(&args),
    }
}

/// Load and validate the API database.
pub fn load_db(path: &Path) -> Result<ApiDb, CliError> {
    let text = read_text(path)?;
    ApiDb::from_json_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Load a model checkpoint.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Checkpoint::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Resolve a `--beam 0` default against the checkpoint's stored width.
pub fn effective_beam(flag: usize, checkpoint: &Checkpoint) -> usize {
    if flag == 0 {
        checkpoint.hyper.beam_width
    } else {
        flag
    }
}

/// Run the model on one encoded example and return the best caption tokens.
pub fn predict_tokens(
    checkpoint: &Checkpoint,
    encoded: &EncodedExample,
    beam_width: usize,
) -> Result<Vec<String>, CliError> {
    let zs = encode_contexts(&checkpoint.params, &encoded.contexts)
        .map_err(|e| CliError::internal(format!("encoding contexts: {e}")))?;
    // Training targets carry at most max_target_parts − 1 tokens before the
    // end token; cap decoding to match.
    let max_len = checkpoint.hyper.max_target_parts - 1;
    let hypotheses = decode_beam(&checkpoint.params, &zs, beam_width, max_len);
    let best = hypotheses
        .first()
        .ok_or_else(|| CliError::internal("beam search returned no hypotheses".to_string()))?;
    Ok(checkpoint.vocab.decode_target(&best.tokens))
}
