//! `train`: dataset lines → trained model checkpoint.

use crate::args::TrainArgs;
use crate::{read_text, CliError};
use prigen_core::corpus::parse_dataset_line;
use prigen_core::nmt::{build_vocab, train, Checkpoint, HyperParams, NmtExample, Vocab};
use std::path::Path;

/// Read a dataset-line file into raw examples. Lines whose target is `-`
/// (predict-only) are rejected for training sets and skipped with a warning
/// in validation sets.
fn read_examples(path: &Path, allow_untargeted: bool) -> Result<Vec<NmtExample>, CliError> {
    let text = read_text(path)?;
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (target, contexts) = parse_dataset_line(line)
            .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if target.is_empty() {
            if allow_untargeted {
                log::warn!("{}:{}: no target caption; skipped", path.display(), i + 1);
                continue;
            }
            return Err(CliError::input(format!(
                "{}:{}: training example has no target caption",
                path.display(),
                i + 1
            )));
        }
        examples.push(NmtExample { target, contexts });
    }
    Ok(examples)
}

fn encode_all(
    vocab: &Vocab,
    examples: &[NmtExample],
    hyper: &HyperParams,
) -> Vec<prigen_core::nmt::EncodedExample> {
    examples
        .iter()
        .map(|ex| vocab.encode_example(ex, hyper.max_contexts, hyper.max_target_parts))
        .collect()
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let train_path = args.data.join("train.txt");
    let validation_path = args.data.join("validation.txt");
    let train_raw = read_examples(&train_path, false)?;
    if train_raw.is_empty() {
        return Err(CliError::input(format!(
            "{}: no training examples",
            train_path.display()
        )));
    }
    let validation_raw = if validation_path.is_file() {
        read_examples(&validation_path, true)?
    } else {
        Vec::new()
    };

    let hyper = HyperParams {
        embedding_size: args.emb,
        encoder_state_size: args.enc,
        decoder_state_size: args.dec,
        max_target_parts: args.max_target,
        max_contexts: args.max_contexts,
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        dropout_keep: args.dropout_keep,
        seed: args.seed,
        ..HyperParams::default()
    };

    let vocab = build_vocab(&train_raw, args.min_count)
        .map_err(|e| CliError::input(e.to_string()))?;
    let encoded_train = encode_all(&vocab, &train_raw, &hyper);
    let encoded_validation = encode_all(&vocab, &validation_raw, &hyper);

    let report = train(&encoded_train, &encoded_validation, &vocab, &hyper)
        .map_err(|e| CliError::input(e.to_string()))?;
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        match report.val_losses.get(epoch) {
            Some(val) => log::info!("epoch {}: loss {loss:.6} val_loss {val:.6}", epoch + 1),
            None => log::info!("epoch {}: loss {loss:.6}", epoch + 1),
        }
    }

    let final_loss = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    let val_note = report
        .val_losses
        .last()
        .map(|v| format!(" val_loss={v:.6}"))
        .unwrap_or_default();
    Checkpoint::new(hyper, vocab, report.params)
        .save(&args.out)
        .map_err(|e| CliError::input(format!("{}: {e}", args.out.display())))?;
    eprintln!(
        "train summary: examples={} epochs={} final_loss={final_loss:.6}{val_note}",
        encoded_train.len(),
        args.epochs
    );
    Ok(())
}
