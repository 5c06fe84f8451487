//! Shared fixture builders for the prigen test suites.
//!
//! Everything in this crate is deliberately independent of `prigen-core`:
//! the dex/manifest builders assemble bytes straight from the published
//! formats and keep their own ledger of what they emitted, so they can act
//! as oracles for the parsers under test.

mod axml_builder;
mod dex_builder;
mod javagen;
mod metrics_fixture;

pub use axml_builder::AxmlBuilder;
pub use dex_builder::{CodeSpec, DexBuilder, DexMethodRef, Insn, InvokeKind, MethodKey, MethodLedger};
pub use javagen::{generate_corpus, GeneratedExample};
pub use metrics_fixture::{
    metrics_fixture_pairs, METRICS_FIXTURE_BLEU4, METRICS_FIXTURE_ROUGE_F1,
    METRICS_FIXTURE_ROUGE_P, METRICS_FIXTURE_ROUGE_R,
};

use std::io::Write;

/// Assemble an APK-shaped zip from named entries (deflate-compressed).
pub fn build_apk(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let mut writer = zip::ZipWriter::new(&mut cursor);
        let options = zip::write::FileOptions::default()
            .compression_method(zip::CompressionMethod::Deflated);
        for (name, bytes) in entries {
            writer.start_file(*name, options).unwrap();
            writer.write_all(bytes).unwrap();
        }
        writer.finish().unwrap();
    }
    cursor.into_inner()
}
