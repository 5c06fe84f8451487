//! `eval`: aligned hypothesis/reference line files → BLEU-4 and ROUGE-LCS
//! report as one JSON object (scores ×100, two decimals).

use crate::args::EvalArgs;
use crate::{read_text, write_text, CliError};
use prigen_core::metrics::evaluate;
use std::path::Path;

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .map(|line| line.split_whitespace().map(str::to_string).collect())
        .collect())
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let hypotheses = read_token_lines(&args.hyp)?;
    let references = read_token_lines(&args.reference)?;
    let report =
        evaluate(&hypotheses, &references).map_err(|e| CliError::input(e.to_string()))?;

    // Hand-formatted so the two-decimal rendering is part of the contract.
    let json = format!(
        "{{\"bleu4\": {:.2}, \"rouge_p\": {:.2}, \"rouge_r\": {:.2}, \"rouge_f1\": {:.2}, \"pairs\": {}}}",
        report.bleu4 * 100.0,
        report.rouge_precision * 100.0,
        report.rouge_recall * 100.0,
        report.rouge_f1 * 100.0,
        report.pair_count
    );
    println!("{json}");
    if let Some(out) = &args.out {
        write_text(out, &format!("{json}\n"))?;
    }
    Ok(())
}
