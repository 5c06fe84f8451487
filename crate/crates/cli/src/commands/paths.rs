//! `paths`: corpus records → corpus records with AST path contexts attached.

use crate::args::PathsArgs;
use crate::{read_jsonl, write_jsonl, CliError};
use prigen_core::astpaths::{
    extract_paths, loc_count, parse_method, subtokenize, PathLimits,
};
use prigen_core::corpus::{obfuscation_score_with_known, ContextTriple, CorpusExample};
use serde::Deserialize;
use std::collections::HashSet;

/// Caption field of an incoming record: free text or pre-split tokens.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CaptionField {
    Text(String),
    Tokens(Vec<String>),
}

impl Default for CaptionField {
    fn default() -> Self {
        CaptionField::Tokens(Vec::new())
    }
}

impl CaptionField {
    fn into_tokens(self) -> Vec<String> {
        match self {
            CaptionField::Text(text) => text
                .split_whitespace()
                .map(|t| t.to_lowercase())
                .collect(),
            CaptionField::Tokens(tokens) => {
                tokens.into_iter().map(|t| t.to_lowercase()).collect()
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    example_id: String,
    source_text: String,
    #[serde(default)]
    target_caption: CaptionField,
}

/// Identifier tokens the obfuscation heuristic must not count against the
/// example: the API surface named by the database.
fn known_names(db: &prigen_core::permdb::ApiDb) -> HashSet<String> {
    let mut names = HashSet::new();
    for spec in db.entries() {
        names.insert(spec.method_name.clone());
        if let Some(simple) = spec.class_name.rsplit('.').next() {
            names.insert(simple.to_string());
        }
        for piece in subtokenize(&spec.method_name) {
            names.insert(piece);
        }
    }
    names
}

pub fn run(args: &PathsArgs) -> Result<(), CliError> {
    if args.max_length < 2 || args.max_width < 1 || args.max_contexts < 1 {
        return Err(CliError::input(
            "limits must satisfy max-length ≥ 2, max-width ≥ 1, max-contexts ≥ 1".to_string(),
        ));
    }
    let records: Vec<RawRecord> = read_jsonl(&args.input)?;
    if records.is_empty() {
        return Err(CliError::input(format!(
            "{}: no records",
            args.input.display()
        )));
    }
    let known = match &args.db {
        Some(path) => known_names(&super::load_db(path)?),
        None => HashSet::new(),
    };
    let limits = PathLimits {
        max_length: args.max_length,
        max_width: args.max_width,
        max_contexts: args.max_contexts,
    };

    let mut out: Vec<CorpusExample> = Vec::with_capacity(records.len());
    let mut skipped = 0usize;
    for record in records {
        let ast = match parse_method(&record.source_text) {
            Ok(ast) => ast,
            Err(e) => {
                skipped += 1;
                log::warn!("skipping {}: {e}", record.example_id);
                continue;
            }
        };
        let contexts: Vec<ContextTriple> = extract_paths(&ast, &limits, args.seed)
            .iter()
            .map(ContextTriple::from)
            .collect();
        out.push(CorpusExample {
            example_id: record.example_id,
            loc: loc_count(&record.source_text),
            obfuscation_score: obfuscation_score_with_known(&record.source_text, &known),
            source_text: record.source_text,
            target_caption: record.target_caption.into_tokens(),
            contexts,
        });
    }
    if out.is_empty() {
        return Err(CliError::input(
            "no record parsed as a supported Java-subset method".to_string(),
        ));
    }

    write_jsonl(&args.out, &out)?;
    eprintln!(
        "paths summary: examples_ok={} skipped={}",
        out.len(),
        skipped
    );
    Ok(())
}
