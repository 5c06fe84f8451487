//! Android binary XML (AXML) reading — just enough chunk handling to pull
//! the package name and `uses-permission` entries out of a compiled
//! AndroidManifest.xml.

use thiserror::Error;

const CHUNK_XML: u16 = 0x0003;
const CHUNK_STRING_POOL: u16 = 0x0001;
const CHUNK_ELEM_START: u16 = 0x0102;
const UTF8_FLAG: u32 = 1 << 8;
const TYPE_STRING: u8 = 0x03;

#[derive(Debug, Error)]
pub enum AxmlError {
    #[error("not a binary XML document (chunk type 0x{0:04x})")]
    BadDocumentType(u16),
    #[error("{what} at offset {offset} runs past the end of the {len}-byte buffer")]
    Truncated {
        what: &'static str,
        offset: usize,
        len: usize,
    },
    #[error("chunk at offset {offset} declares impossible size {size}")]
    BadChunkSize { offset: usize, size: u32 },
    #[error("string pool entry {index} is malformed")]
    BadString { index: usize },
    #[error("document contains no string pool before its elements")]
    MissingStringPool,
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn u16_at(&self, offset: usize, what: &'static str) -> Result<u16, AxmlError> {
        if offset + 2 > self.bytes.len() {
            return Err(AxmlError::Truncated {
                what,
                offset,
                len: self.bytes.len(),
            });
        }
        Ok(u16::from_le_bytes([self.bytes[offset], self.bytes[offset + 1]]))
    }

    fn u32_at(&self, offset: usize, what: &'static str) -> Result<u32, AxmlError> {
        if offset + 4 > self.bytes.len() {
            return Err(AxmlError::Truncated {
                what,
                offset,
                len: self.bytes.len(),
            });
        }
        Ok(u32::from_le_bytes([
            self.bytes[offset],
            self.bytes[offset + 1],
            self.bytes[offset + 2],
            self.bytes[offset + 3],
        ]))
    }
}

fn parse_string_pool(r: &Reader, chunk_off: usize, chunk_size: usize) -> Result<Vec<String>, AxmlError> {
    let count = r.u32_at(chunk_off + 8, "string count")? as usize;
    let flags = r.u32_at(chunk_off + 16, "string pool flags")?;
    let strings_start = r.u32_at(chunk_off + 20, "strings_start")? as usize;
    let header_size = r.u16_at(chunk_off + 2, "pool header size")? as usize;
    let utf8 = flags & UTF8_FLAG != 0;
    let chunk_end = chunk_off + chunk_size;

    let mut strings = Vec::with_capacity(count.min(4096));
    for i in 0..count {
        let entry_off = chunk_off + header_size + 4 * i;
        let rel = r.u32_at(entry_off, "string offset")? as usize;
        let mut pos = chunk_off + strings_start + rel;
        if pos >= chunk_end {
            return Err(AxmlError::BadString { index: i });
        }
        if utf8 {
            // two lengths (utf-16 units, then bytes), each with a high-bit
            // two-byte extension
            let read_len8 = |pos: &mut usize| -> Result<usize, AxmlError> {
                let b = *r.bytes.get(*pos).ok_or(AxmlError::BadString { index: i })?;
                *pos += 1;
                if b & 0x80 != 0 {
                    let b2 = *r.bytes.get(*pos).ok_or(AxmlError::BadString { index: i })?;
                    *pos += 1;
                    Ok((((b & 0x7f) as usize) << 8) | b2 as usize)
                } else {
                    Ok(b as usize)
                }
            };
            let _utf16_len = read_len8(&mut pos)?;
            let byte_len = read_len8(&mut pos)?;
            let end = pos + byte_len;
            if end > r.bytes.len() || end > chunk_end {
                return Err(AxmlError::BadString { index: i });
            }
            let s = std::str::from_utf8(&r.bytes[pos..end])
                .map_err(|_| AxmlError::BadString { index: i })?;
            strings.push(s.to_string());
        } else {
            let first = r.u16_at(pos, "utf16 length")?;
            pos += 2;
            let len = if first & 0x8000 != 0 {
                let second = r.u16_at(pos, "utf16 length (extended)")?;
                pos += 2;
                (((first & 0x7fff) as usize) << 16) | second as usize
            } else {
                first as usize
            };
            let end = pos + 2 * len;
            if end > r.bytes.len() || end > chunk_end {
                return Err(AxmlError::BadString { index: i });
            }
            let units: Vec<u16> = (0..len)
                .map(|k| u16::from_le_bytes([r.bytes[pos + 2 * k], r.bytes[pos + 2 * k + 1]]))
                .collect();
            let s = String::from_utf16(&units).map_err(|_| AxmlError::BadString { index: i })?;
            strings.push(s);
        }
    }
    Ok(strings)
}

/// One start-element as the manifest reader needs it: resolved name plus
/// resolved (attribute name, string value) pairs.
#[derive(Debug)]
pub struct AxmlElement {
    pub name: String,
    pub attributes: Vec<(String, String)>,
}

/// Walk the chunk sequence and return every start element with its
/// string-typed attributes resolved against the pool.
pub fn parse_axml(bytes: &[u8]) -> Result<Vec<AxmlElement>, AxmlError> {
    let r = Reader { bytes };
    let doc_type = r.u16_at(0, "document chunk type")?;
    if doc_type != CHUNK_XML {
        return Err(AxmlError::BadDocumentType(doc_type));
    }
    let doc_header = r.u16_at(2, "document header size")? as usize;
    let doc_size = r.u32_at(4, "document size")? as usize;
    if doc_size > bytes.len() {
        return Err(AxmlError::Truncated {
            what: "document body",
            offset: doc_size,
            len: bytes.len(),
        });
    }
    if doc_size < doc_header.max(8) {
        return Err(AxmlError::BadChunkSize {
            offset: 0,
            size: doc_size as u32,
        });
    }
    let end = doc_size;

    let mut strings: Option<Vec<String>> = None;
    let mut elements = Vec::new();
    let mut off = doc_header;
    while off + 8 <= end {
        let chunk_type = r.u16_at(off, "chunk type")?;
        let header_size = r.u16_at(off + 2, "chunk header size")? as usize;
        let size = r.u32_at(off + 4, "chunk size")?;
        if size < 8 || off + size as usize > end {
            return Err(AxmlError::BadChunkSize {
                offset: off,
                size,
            });
        }
        match chunk_type {
            CHUNK_STRING_POOL => {
                strings = Some(parse_string_pool(&r, off, size as usize)?);
            }
            CHUNK_ELEM_START => {
                let pool = strings.as_ref().ok_or(AxmlError::MissingStringPool)?;
                let resolve = |idx: u32| -> String {
                    pool.get(idx as usize).cloned().unwrap_or_default()
                };
                let ext = off + header_size;
                let name_idx = r.u32_at(ext + 4, "element name")?;
                let attr_start = r.u16_at(ext + 8, "attribute_start")? as usize;
                let attr_size = r.u16_at(ext + 10, "attribute_size")? as usize;
                let attr_count = r.u16_at(ext + 12, "attribute_count")? as usize;
                if attr_size < 20 {
                    return Err(AxmlError::BadChunkSize {
                        offset: ext + 10,
                        size: attr_size as u32,
                    });
                }
                let mut attributes = Vec::with_capacity(attr_count.min(64));
                for a in 0..attr_count {
                    let at = ext + attr_start + a * attr_size;
                    let attr_name = r.u32_at(at + 4, "attribute name")?;
                    let raw_value = r.u32_at(at + 8, "attribute raw value")?;
                    let data_type = *r
                        .bytes
                        .get(at + 15)
                        .ok_or(AxmlError::Truncated {
                            what: "attribute type",
                            offset: at + 15,
                            len: bytes.len(),
                        })?;
                    let data = r.u32_at(at + 16, "attribute data")?;
                    let value = if raw_value != u32::MAX {
                        resolve(raw_value)
                    } else if data_type == TYPE_STRING {
                        resolve(data)
                    } else {
                        // non-string attribute (int/bool/reference): render the raw data
                        format!("@{data}")
                    };
                    attributes.push((resolve(attr_name), value));
                }
                elements.push(AxmlElement {
                    name: resolve(name_idx),
                    attributes,
                });
            }
            _ => {} // namespaces, end elements, cdata, resource maps: skip
        }
        off += size as usize;
    }
    if off != end {
        return Err(AxmlError::Truncated {
            what: "chunk header",
            offset: off,
            len: end,
        });
    }
    Ok(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use prigen_testutil::AxmlBuilder;

    #[test]
    fn reads_package_and_permissions_from_builder_output() {
        let bytes = AxmlBuilder::manifest(
            "com.example.app",
            &[
                "android.permission.INTERNET",
                "android.permission.ACCESS_FINE_LOCATION",
            ],
        );
        let elements = parse_axml(&bytes).unwrap();
        let manifest = elements.iter().find(|e| e.name == "manifest").unwrap();
        assert!(manifest
            .attributes
            .contains(&("package".to_string(), "com.example.app".to_string())));
        let perms: Vec<&str> = elements
            .iter()
            .filter(|e| e.name == "uses-permission")
            .flat_map(|e| e.attributes.iter())
            .filter(|(k, _)| k == "name")
            .map(|(_, v)| v.as_str())
            .collect();
        assert_eq!(
            perms,
            vec![
                "android.permission.INTERNET",
                "android.permission.ACCESS_FINE_LOCATION"
            ]
        );
    }

    #[test]
    fn plain_text_is_not_a_binary_document() {
        assert!(matches!(
            parse_axml(b"<manifest package=\"a.b\"/>"),
            Err(AxmlError::BadDocumentType(_))
        ));
    }

    #[test]
    fn truncated_chunks_error_cleanly() {
        let bytes = AxmlBuilder::manifest("com.example.app", &["android.permission.INTERNET"]);
        for cut in [1, 3, 9, 30, bytes.len() / 2] {
            assert!(parse_axml(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn arbitrary_bytes_never_panic(
            bytes in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..1024)
        ) {
            let _ = parse_axml(&bytes);
        }
    }
}
