//! `caption`: PRCS records + model + API db → privacy captions.
//!
//! Bytecode listings cannot be path-parsed, so records whose `code` is not a
//! Java-subset source rendering still get their API sentences (with the
//! placeholder lead-in) and are marked `no_source`.

use crate::args::CaptionArgs;
use crate::{read_jsonl, write_jsonl, CliError, DEFAULT_SEED};
use prigen_core::astpaths::{extract_paths, parse_method, PathLimits};
use prigen_core::caption::assemble;
use prigen_core::corpus::ContextTriple;
use prigen_core::nmt::NmtExample;
use prigen_core::permdb::{ApiDb, ApiSpec};
use prigen_core::prcs::{CalledApi, Prcs};
use serde::Serialize;

#[derive(Debug, Serialize)]
struct CaptionedRecord {
    #[serde(flatten)]
    prcs: Prcs,
    code_caption: String,
    privacy_caption: String,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    no_source: bool,
}

/// Resolve a record's called API against the database; fall back to the
/// fields embedded in the record when the database no longer lists it.
fn resolve_api(db: &ApiDb, called: &CalledApi) -> ApiSpec {
    if let Some(spec) = db.lookup(&called.class, &called.method, "") {
        return spec.clone();
    }
    ApiSpec {
        class_name: called.class.clone(),
        method_name: called.method.clone(),
        descriptor: None,
        description: called.description.clone(),
        sensitive_info: called.sensitive_info.clone(),
        permissions: called.permissions.clone(),
        permission_group: called.group,
        deprecated: false,
    }
}

pub fn run(args: &CaptionArgs) -> Result<(), CliError> {
    let checkpoint = super::load_checkpoint(&args.model)?;
    let db = super::load_db(&args.db)?;
    let beam = super::effective_beam(args.beam, &checkpoint);
    if beam == 0 {
        return Err(CliError::input("--beam must be at least 1".to_string()));
    }
    let records: Vec<Prcs> = read_jsonl(&args.prcs)?;
    let limits = PathLimits {
        max_contexts: checkpoint.hyper.max_contexts,
        ..PathLimits::default()
    };

    let mut out: Vec<CaptionedRecord> = Vec::with_capacity(records.len());
    let mut captioned = 0usize;
    let mut no_source = 0usize;
    let mut skipped = 0usize;
    for record in records {
        let tokens: Option<Vec<String>> = match parse_method(&record.code) {
            Ok(ast) => {
                let contexts: Vec<ContextTriple> = extract_paths(&ast, &limits, DEFAULT_SEED)
                    .iter()
                    .map(ContextTriple::from)
                    .collect();
                let encoded = checkpoint.vocab.encode_example(
                    &NmtExample {
                        target: Vec::new(),
                        contexts,
                    },
                    checkpoint.hyper.max_contexts,
                    checkpoint.hyper.max_target_parts,
                );
                Some(super::predict_tokens(&checkpoint, &encoded, beam)?)
            }
            Err(e) => {
                log::debug!(
                    "{}:{}.{}: no source-form rendering ({e})",
                    record.apk_id,
                    record.class,
                    record.method
                );
                None
            }
        };

        let specs: Vec<ApiSpec> = record.apis.iter().map(|a| resolve_api(&db, a)).collect();
        let assembled = match assemble(tokens.as_deref().unwrap_or(&[]), &specs) {
            Ok(caption) => caption,
            Err(e) => {
                skipped += 1;
                log::warn!(
                    "skipping {}:{}.{}: {e}",
                    record.apk_id,
                    record.class,
                    record.method
                );
                continue;
            }
        };
        match tokens {
            Some(_) => captioned += 1,
            None => no_source += 1,
        }
        out.push(CaptionedRecord {
            prcs: record,
            code_caption: assembled.code_caption,
            privacy_caption: assembled.full_text,
            no_source: tokens.is_none(),
        });
    }

    write_jsonl(&args.out, &out)?;
    eprintln!(
        "caption summary: records={} captioned={captioned} no_source={no_source} skipped={skipped}",
        out.len()
    );
    Ok(())
}
