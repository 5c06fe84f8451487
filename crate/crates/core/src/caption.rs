//! Privacy-caption assembly.
//!
//! A privacy caption pairs a generated description of *what the code does*
//! with fixed sentences describing *which sensitive information* the called
//! permission-requiring APIs expose. Assembly is a pure template step:
//! phrasing polish is out of scope.

use crate::permdb::ApiSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Lead-in used in `full_text` when the model produced no caption tokens.
pub const EMPTY_CAPTION_LEAD_IN: &str = "No description was generated for this code.";

#[derive(Debug, Error)]
pub enum CaptionError {
    /// A permission-requiring code segment always calls at least one API, so
    /// an empty API list means the caller wired things up wrong.
    #[error("cannot assemble a privacy caption without any called APIs")]
    EmptyApis,
}

/// A fully assembled privacy caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyCaption {
    /// Sentence-cased rendering of the generated caption tokens, with a
    /// trailing period; empty when the model produced nothing.
    pub code_caption: String,
    /// One sentence per distinct (class, method) pair, in canonical
    /// (group, class, method) order.
    pub api_sentences: Vec<String>,
    /// The assembled text: the code caption (or the fixed lead-in when the
    /// caption is empty) followed by every API sentence, space-separated.
    pub full_text: String,
}

fn sentence_case(tokens: &[String]) -> String {
    let joined = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let mut chars = joined.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => {
            let mut out: String = first.to_uppercase().collect();
            out.push_str(chars.as_str());
            out.push('.');
            out
        }
    }
}

fn api_sentence(spec: &ApiSpec) -> String {
    format!(
        "This code accesses {} via {}.{}: {}",
        spec.sensitive_info, spec.class_name, spec.method_name, spec.description
    )
}

/// Assemble a privacy caption from generated caption tokens and the APIs the
/// code segment calls.
///
/// The API list is canonicalized — sorted by (group, class, method) and
/// reduced to one sentence per distinct (class, method) pair — so permuting
/// or repeating inputs never changes the output.
pub fn assemble(
    code_caption_tokens: &[String],
    apis: &[ApiSpec],
) -> Result<PrivacyCaption, CaptionError> {
    if apis.is_empty() {
        return Err(CaptionError::EmptyApis);
    }

    let mut ordered: Vec<&ApiSpec> = apis.iter().collect();
    // The tail keys make the order total over every sentence-relevant field,
    // so duplicate (class, method) entries pick the same winner regardless of
    // input order.
    ordered.sort_by_key(|s| {
        (
            s.permission_group,
            &s.class_name,
            &s.method_name,
            &s.sensitive_info,
            &s.description,
        )
    });

    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut api_sentences = Vec::new();
    for spec in ordered {
        if seen.insert((spec.class_name.as_str(), spec.method_name.as_str())) {
            api_sentences.push(api_sentence(spec));
        }
    }

    let code_caption = sentence_case(code_caption_tokens);
    let lead: &str = if code_caption.is_empty() {
        EMPTY_CAPTION_LEAD_IN
    } else {
        &code_caption
    };
    let mut parts = Vec::with_capacity(1 + api_sentences.len());
    parts.push(lead);
    parts.extend(api_sentences.iter().map(String::as_str));
    let full_text = parts.join(" ");

    Ok(PrivacyCaption {
        code_caption,
        api_sentences,
        full_text,
    })
}
