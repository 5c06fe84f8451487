//! `predict`: dataset lines + checkpoint → one caption per line.

use crate::args::PredictArgs;
use crate::{lines_to_text, read_text, write_text, CliError};
use prigen_core::corpus::parse_dataset_line;
use prigen_core::nmt::NmtExample;

pub fn run(args: &PredictArgs) -> Result<(), CliError> {
    let checkpoint = super::load_checkpoint(&args.model)?;
    let beam = super::effective_beam(args.beam, &checkpoint);
    if beam == 0 {
        return Err(CliError::input("--beam must be at least 1".to_string()));
    }

    let text = read_text(&args.input)?;
    let mut captions: Vec<String> = Vec::new();
    let mut references: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (target, contexts) = parse_dataset_line(line)
            .map_err(|e| CliError::input(format!("{}:{}: {e}", args.input.display(), i + 1)))?;
        let encoded = checkpoint.vocab.encode_example(
            &NmtExample {
                target: Vec::new(),
                contexts,
            },
            checkpoint.hyper.max_contexts,
            checkpoint.hyper.max_target_parts,
        );
        let tokens = super::predict_tokens(&checkpoint, &encoded, beam)?;
        captions.push(tokens.join(" "));
        references.push(target.join(" "));
    }
    if captions.is_empty() {
        return Err(CliError::input(format!(
            "{}: no input lines",
            args.input.display()
        )));
    }

    write_text(&args.out, &lines_to_text(&captions))?;
    if let Some(refs_out) = &args.refs_out {
        write_text(refs_out, &lines_to_text(&references))?;
    }
    eprintln!("predict summary: examples={} beam={beam}", captions.len());
    Ok(())
}
