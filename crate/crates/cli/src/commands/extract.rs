//! `extract`: APKs → PRCS records (JSON Lines).

use crate::apk::{parse_apk, ApkContents};
use crate::args::ExtractArgs;
use crate::{write_jsonl, CliError};
use prigen_core::callgraph::build_call_graph;
use prigen_core::dex::{parse_dex, DexFile};
use prigen_core::manifest::parse_manifest;
use prigen_core::permdb::ApiDb;
use prigen_core::prcs::{cross_check_permissions, find_prcs, Prcs};
use std::path::{Path, PathBuf};

#[derive(Debug, PartialEq, Eq)]
pub struct ExtractSummary {
    pub apks_ok: usize,
    pub apks_failed: usize,
    pub prcs_total: usize,
}

/// Full analysis of one APK: container → dex parsing → call graph → PRCS.
fn analyze(contents: &ApkContents, db: &ApiDb, hops: u32) -> Result<Vec<Prcs>, CliError> {
    let mut dexes: Vec<DexFile> = Vec::with_capacity(contents.dex_blobs.len());
    for (i, blob) in contents.dex_blobs.iter().enumerate() {
        let dex = parse_dex(blob)
            .map_err(|e| CliError::input(format!("{}: dex #{}: {e}", contents.apk_id, i + 1)))?;
        dexes.push(dex);
    }
    let graph = build_call_graph(&dexes);
    let records = find_prcs(&contents.apk_id, &graph, &dexes, db, hops)
        .map_err(|e| CliError::input(format!("{}: {e}", contents.apk_id)))?;

    if let Some(manifest) = &contents.manifest_bytes {
        match parse_manifest(manifest) {
            Ok(info) => {
                let report = cross_check_permissions(&info, &records);
                if !report.undeclared_use.is_empty() {
                    log::info!(
                        "{} ({}): permissions used but not declared: {}",
                        contents.apk_id,
                        info.package_name,
                        report.undeclared_use.join(", ")
                    );
                }
                if !report.unmatched_declaration.is_empty() {
                    log::debug!(
                        "{} ({}): declared permissions with no extracted use: {}",
                        contents.apk_id,
                        info.package_name,
                        report.unmatched_declaration.join(", ")
                    );
                }
            }
            Err(e) => log::warn!(
                "{}: manifest unreadable ({e}); permission cross-check skipped",
                contents.apk_id
            ),
        }
    }
    Ok(records)
}

fn extract_one(path: &Path, db: &ApiDb, hops: u32) -> Result<Vec<Prcs>, CliError> {
    let contents = parse_apk(path).map_err(|e| CliError::input(e.to_string()))?;
    analyze(&contents, db, hops)
}

/// List the `.apk` files of a batch directory, sorted by file name.
fn batch_targets(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", dir.display())))?;
    let mut targets = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| CliError::input(format!("reading {}: {e}", dir.display())))?;
        let path = entry.path();
        let is_apk = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("apk"));
        if path.is_file() && is_apk {
            targets.push(path);
        }
    }
    if targets.is_empty() {
        return Err(CliError::input(format!(
            "no .apk files in {}",
            dir.display()
        )));
    }
    targets.sort();
    Ok(targets)
}

pub fn run(args: &ExtractArgs) -> Result<(), CliError> {
    let db = super::load_db(&args.db)?;
    let batch_mode = args.apks.len() == 1 && args.apks[0].is_dir();
    let targets = if batch_mode {
        batch_targets(&args.apks[0])?
    } else {
        args.apks.clone()
    };

    // One analysis per APK, fanned out over a fixed-size pool. Results come
    // back in submission order regardless of scheduling, so the merged
    // output cannot depend on the worker count.
    let workers = args.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::internal(format!("building worker pool: {e}")))?;
    let results: Vec<(String, Result<Vec<Prcs>, CliError>)> = pool.install(|| {
        use rayon::prelude::*;
        targets
            .par_iter()
            .map(|path| (crate::apk::apk_id_of(path), extract_one(path, &db, args.hops)))
            .collect()
    });

    let mut merged: Vec<Prcs> = Vec::new();
    let mut summary = ExtractSummary {
        apks_ok: 0,
        apks_failed: 0,
        prcs_total: 0,
    };
    for (apk_id, result) in results {
        match result {
            Ok(records) => {
                summary.apks_ok += 1;
                summary.prcs_total += records.len();
                merged.extend(records);
            }
            Err(e) if batch_mode => {
                summary.apks_failed += 1;
                log::warn!("skipping {apk_id}: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    // find_prcs returns records sorted by method identity; a stable sort on
    // apk_id keeps that order within each APK.
    merged.sort_by(|a, b| a.apk_id.cmp(&b.apk_id));

    write_jsonl(&args.out, &merged)?;
    eprintln!(
        "extract summary: apks_ok={} apks_failed={} prcs_total={}",
        summary.apks_ok, summary.apks_failed, summary.prcs_total
    );
    Ok(())
}
