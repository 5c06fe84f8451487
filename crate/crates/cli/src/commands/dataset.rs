//! `dataset dedup|filter|split`: corpus hygiene and the final cut into
//! model-facing dataset-line files.

use crate::args::{DatasetArgs, DatasetOp};
use crate::{lines_to_text, read_jsonl, write_jsonl, write_text, CliError};
use prigen_core::corpus::{
    dedup, filter_obfuscated, format_dataset_line, split, CorpusExample, SplitSpec,
};
use std::path::Path;

pub fn run(args: &DatasetArgs) -> Result<(), CliError> {
    match &args.op {
        DatasetOp::Dedup {
            input,
            out,
            removed,
            shingle,
            threshold,
        } => run_dedup(input, out, removed.as_deref(), *shingle, *threshold),
        DatasetOp::Filter {
            input,
            out,
            max_obf,
        } => run_filter(input, out, *max_obf),
        DatasetOp::Split {
            input,
            out_dir,
            split,
            seed,
        } => run_split(input, out_dir, split, *seed),
    }
}

fn run_dedup(
    input: &Path,
    out: &Path,
    removed_out: Option<&Path>,
    shingle: usize,
    threshold: f64,
) -> Result<(), CliError> {
    if shingle < 1 {
        return Err(CliError::input("--shingle must be at least 1".to_string()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CliError::input(
            "--threshold must lie in (0, 1]".to_string(),
        ));
    }
    let examples: Vec<CorpusExample> = read_jsonl(input)?;
    let total = examples.len();
    let (kept, removed) = dedup(examples, shingle, threshold);
    write_jsonl(out, &kept)?;
    if let Some(path) = removed_out {
        write_jsonl(path, &removed)?;
    }
    eprintln!(
        "dedup summary: input={} kept={} removed={}",
        total,
        kept.len(),
        removed.len()
    );
    Ok(())
}

fn run_filter(input: &Path, out: &Path, max_obf: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&max_obf) {
        return Err(CliError::input("--max-obf must lie in [0, 1]".to_string()));
    }
    let examples: Vec<CorpusExample> = read_jsonl(input)?;
    let total = examples.len();
    let kept = filter_obfuscated(examples, max_obf);
    write_jsonl(out, &kept)?;
    eprintln!(
        "filter summary: input={} kept={} removed={}",
        total,
        kept.len(),
        total - kept.len()
    );
    Ok(())
}

fn parse_fractions(text: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!(
            "--split wants three comma-separated fractions, got {text:?}"
        )));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("--split: {part:?} is not a number")))?;
    }
    Ok((values[0], values[1], values[2]))
}

fn write_lines_file(dir: &Path, name: &str, examples: &[CorpusExample]) -> Result<(), CliError> {
    let lines: Vec<String> = examples
        .iter()
        .map(|e| format_dataset_line(&e.target_caption, &e.contexts))
        .collect();
    write_text(&dir.join(name), &lines_to_text(&lines))
}

fn run_split(input: &Path, out_dir: &Path, fractions: &str, seed: u64) -> Result<(), CliError> {
    let (train_fraction, validation_fraction, test_fraction) = parse_fractions(fractions)?;
    let examples: Vec<CorpusExample> = read_jsonl(input)?;
    let spec = SplitSpec {
        train_fraction,
        validation_fraction,
        test_fraction,
        seed,
    };
    let (train, validation, test) =
        split(examples, &spec).map_err(|e| CliError::input(e.to_string()))?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", out_dir.display())))?;
    write_lines_file(out_dir, "train.txt", &train)?;
    write_lines_file(out_dir, "validation.txt", &validation)?;
    write_lines_file(out_dir, "test.txt", &test)?;
    eprintln!(
        "split summary: train={} validation={} test={}",
        train.len(),
        validation.len(),
        test.len()
    );
    Ok(())
}
