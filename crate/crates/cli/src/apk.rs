//! APK container access: an APK is a ZIP holding `AndroidManifest.xml` and
//! one or more `classes*.dex` entries.

use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApkError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a ZIP container: {detail}")]
    NotZip { path: String, detail: String },
    #[error("{path} contains no classes*.dex entry")]
    NoDex { path: String },
}

/// Raw contents pulled from one APK. A missing manifest is tolerated (the
/// permission cross-check is skipped); a missing dex is not.
#[derive(Debug, Clone)]
pub struct ApkContents {
    pub apk_id: String,
    pub manifest_bytes: Option<Vec<u8>>,
    /// `classes.dex`, `classes2.dex`, ... in numeric order.
    pub dex_blobs: Vec<Vec<u8>>,
}

/// Numeric index of a `classes*.dex` entry name: `classes.dex` → 1,
/// `classes7.dex` → 7. Anything else is not a dex entry.
fn dex_index(name: &str) -> Option<u32> {
    let stem = name.strip_prefix("classes")?.strip_suffix(".dex")?;
    if stem.is_empty() {
        Some(1)
    } else {
        stem.parse().ok().filter(|&n| n >= 2)
    }
}

/// Identifier for an APK: its file name without the extension.
pub fn apk_id_of(path: &Path) -> String {
    path.file_stem()
        .or_else(|| path.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Open an APK and extract the manifest and all dex entries.
pub fn parse_apk(path: &Path) -> Result<ApkContents, ApkError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| ApkError::Io {
        path: display.clone(),
        source,
    })?;
    let mut archive =
        zip::ZipArchive::new(std::io::BufReader::new(file)).map_err(|e| ApkError::NotZip {
            path: display.clone(),
            detail: e.to_string(),
        })?;

    let mut manifest_bytes = None;
    let mut dexes: Vec<(u32, Vec<u8>)> = Vec::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i).map_err(|e| ApkError::NotZip {
            path: display.clone(),
            detail: e.to_string(),
        })?;
        let name = entry.name().to_string();
        let wanted_dex = dex_index(&name);
        if name != "AndroidManifest.xml" && wanted_dex.is_none() {
            continue;
        }
        let mut bytes = Vec::new();
        entry
            .read_to_end(&mut bytes)
            .map_err(|e| ApkError::NotZip {
                path: display.clone(),
                detail: format!("entry {name}: {e}"),
            })?;
        match wanted_dex {
            Some(index) => dexes.push((index, bytes)),
            None => manifest_bytes = Some(bytes),
        }
    }

    if dexes.is_empty() {
        return Err(ApkError::NoDex { path: display });
    }
    dexes.sort_by_key(|(index, _)| *index);
    if manifest_bytes.is_none() {
        log::warn!("{display}: no AndroidManifest.xml; permission cross-check skipped");
    }
    Ok(ApkContents {
        apk_id: apk_id_of(path),
        manifest_bytes,
        dex_blobs: dexes.into_iter().map(|(_, bytes)| bytes).collect(),
    })
}
