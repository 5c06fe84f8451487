//! AndroidManifest.xml reading: accepts both plain-text XML and compiled
//! binary XML, returning the package name and declared permissions.

use std::collections::BTreeSet;

use quick_xml::events::Event;
use thiserror::Error;

use crate::axml::{parse_axml, AxmlError};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("binary manifest: {0}")]
    Axml(#[from] AxmlError),
    #[error("xml manifest: {0}")]
    Xml(#[from] quick_xml::Error),
    #[error("attribute in xml manifest: {0}")]
    XmlAttr(#[from] quick_xml::events::attributes::AttrError),
    #[error("manifest is neither plain XML nor binary XML")]
    UnrecognizedFormat,
    #[error("manifest has no package attribute")]
    MissingPackage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestInfo {
    pub package_name: String,
    pub declared_permissions: BTreeSet<String>,
}

fn parse_plain_xml(bytes: &[u8]) -> Result<ManifestInfo, ManifestError> {
    let text = String::from_utf8_lossy(bytes);
    let mut reader = quick_xml::Reader::from_str(&text);
    reader.config_mut().trim_text(true);
    let mut package_name: Option<String> = None;
    let mut declared_permissions = BTreeSet::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf)? {
            Event::Start(e) | Event::Empty(e) => {
                let name = e.name();
                let local = String::from_utf8_lossy(name.local_name().as_ref()).to_string();
                if local == "manifest" {
                    for attr in e.attributes() {
                        let attr = attr?;
                        if attr.key.local_name().as_ref() == b"package" {
                            package_name =
                                Some(String::from_utf8_lossy(&attr.value).to_string());
                        }
                    }
                } else if local == "uses-permission" {
                    for attr in e.attributes() {
                        let attr = attr?;
                        if attr.key.local_name().as_ref() == b"name" {
                            declared_permissions
                                .insert(String::from_utf8_lossy(&attr.value).to_string());
                        }
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(ManifestInfo {
        package_name: package_name.ok_or(ManifestError::MissingPackage)?,
        declared_permissions,
    })
}

fn parse_binary_xml(bytes: &[u8]) -> Result<ManifestInfo, ManifestError> {
    let elements = parse_axml(bytes)?;
    let mut package_name: Option<String> = None;
    let mut declared_permissions = BTreeSet::new();
    for element in elements {
        if element.name == "manifest" {
            for (key, value) in &element.attributes {
                if key == "package" {
                    package_name = Some(value.clone());
                }
            }
        } else if element.name == "uses-permission" {
            for (key, value) in &element.attributes {
                if key == "name" {
                    declared_permissions.insert(value.clone());
                }
            }
        }
    }
    Ok(ManifestInfo {
        package_name: package_name.ok_or(ManifestError::MissingPackage)?,
        declared_permissions,
    })
}

/// Parse manifest bytes in either representation. Binary documents are
/// recognized by their XML chunk header; anything starting with `<`
/// (after optional BOM/whitespace) is treated as plain text.
pub fn parse_manifest(bytes: &[u8]) -> Result<ManifestInfo, ManifestError> {
    if bytes.len() >= 4 && bytes[0] == 0x03 && bytes[1] == 0x00 {
        return parse_binary_xml(bytes);
    }
    let stripped = bytes.strip_prefix(b"\xef\xbb\xbf").unwrap_or(bytes);
    if stripped.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'<') {
        return parse_plain_xml(bytes);
    }
    Err(ManifestError::UnrecognizedFormat)
}
