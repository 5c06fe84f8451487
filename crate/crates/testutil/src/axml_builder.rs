//! Builder for Android binary XML manifests.
//!
//! Emits the chunk sequence a resource packer would produce for a minimal
//! manifest: XML header, UTF-16 string pool, namespace start, one `manifest`
//! element carrying `package`, one self-closed `uses-permission` element per
//! permission, namespace end. Assembled straight from the chunk layout so it
//! can serve as a fixture for a parser it shares no code with.

const ANDROID_NS: &str = "http://schemas.android.com/apk/res/android";

const CHUNK_XML: u16 = 0x0003;
const CHUNK_STRING_POOL: u16 = 0x0001;
const CHUNK_NS_START: u16 = 0x0100;
const CHUNK_NS_END: u16 = 0x0101;
const CHUNK_ELEM_START: u16 = 0x0102;
const CHUNK_ELEM_END: u16 = 0x0103;

pub struct AxmlBuilder {
    strings: Vec<String>,
}

impl AxmlBuilder {
    /// Binary manifest declaring `package` and the given `uses-permission`
    /// entries.
    pub fn manifest(package: &str, permissions: &[&str]) -> Vec<u8> {
        let mut b = AxmlBuilder { strings: Vec::new() };
        let s_android = b.intern("android");
        let s_ns = b.intern(ANDROID_NS);
        let s_name = b.intern("name");
        let s_package = b.intern("package");
        let s_manifest = b.intern("manifest");
        let s_uses = b.intern("uses-permission");
        let s_pkg_value = b.intern(package);
        let perm_values: Vec<u32> = permissions.iter().map(|p| b.intern(p)).collect();

        let mut body: Vec<u8> = Vec::new();
        ns_chunk(&mut body, CHUNK_NS_START, s_android, s_ns);
        start_element(
            &mut body,
            s_manifest,
            &[(u32::MAX, s_package, s_pkg_value)],
        );
        for value in &perm_values {
            start_element(&mut body, s_uses, &[(s_ns, s_name, *value)]);
            end_element(&mut body, s_uses);
        }
        end_element(&mut body, s_manifest);
        ns_chunk(&mut body, CHUNK_NS_END, s_android, s_ns);

        let pool = b.string_pool();
        let total = 8 + pool.len() + body.len();
        let mut out = Vec::with_capacity(total);
        out.extend_from_slice(&CHUNK_XML.to_le_bytes());
        out.extend_from_slice(&8u16.to_le_bytes());
        out.extend_from_slice(&(total as u32).to_le_bytes());
        out.extend_from_slice(&pool);
        out.extend_from_slice(&body);
        out
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(i) = self.strings.iter().position(|x| x == s) {
            return i as u32;
        }
        self.strings.push(s.to_string());
        (self.strings.len() - 1) as u32
    }

    fn string_pool(&self) -> Vec<u8> {
        let mut offsets: Vec<u32> = Vec::new();
        let mut blob: Vec<u8> = Vec::new();
        for s in &self.strings {
            offsets.push(blob.len() as u32);
            let units: Vec<u16> = s.encode_utf16().collect();
            blob.extend_from_slice(&(units.len() as u16).to_le_bytes());
            for u in units {
                blob.extend_from_slice(&u.to_le_bytes());
            }
            blob.extend_from_slice(&0u16.to_le_bytes());
        }
        while blob.len() % 4 != 0 {
            blob.push(0);
        }
        let header_size = 28u16;
        let strings_start = header_size as u32 + 4 * self.strings.len() as u32;
        let chunk_size = strings_start + blob.len() as u32;
        let mut out = Vec::with_capacity(chunk_size as usize);
        out.extend_from_slice(&CHUNK_STRING_POOL.to_le_bytes());
        out.extend_from_slice(&header_size.to_le_bytes());
        out.extend_from_slice(&chunk_size.to_le_bytes());
        out.extend_from_slice(&(self.strings.len() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // style_count
        out.extend_from_slice(&0u32.to_le_bytes()); // flags: utf-16
        out.extend_from_slice(&strings_start.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // styles_start
        for off in offsets {
            out.extend_from_slice(&off.to_le_bytes());
        }
        out.extend_from_slice(&blob);
        out
    }
}

fn ns_chunk(out: &mut Vec<u8>, chunk_type: u16, prefix: u32, uri: u32) {
    out.extend_from_slice(&chunk_type.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(&24u32.to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes()); // line number
    out.extend_from_slice(&u32::MAX.to_le_bytes()); // comment
    out.extend_from_slice(&prefix.to_le_bytes());
    out.extend_from_slice(&uri.to_le_bytes());
}

/// attrs: (namespace string index or u32::MAX, name index, string value index)
fn start_element(out: &mut Vec<u8>, name: u32, attrs: &[(u32, u32, u32)]) {
    let size = 36 + 20 * attrs.len() as u32;
    out.extend_from_slice(&CHUNK_ELEM_START.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(&size.to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes()); // line number
    out.extend_from_slice(&u32::MAX.to_le_bytes()); // comment
    out.extend_from_slice(&u32::MAX.to_le_bytes()); // element namespace
    out.extend_from_slice(&name.to_le_bytes());
    out.extend_from_slice(&20u16.to_le_bytes()); // attribute_start
    out.extend_from_slice(&20u16.to_le_bytes()); // attribute_size
    out.extend_from_slice(&(attrs.len() as u16).to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // id_index
    out.extend_from_slice(&0u16.to_le_bytes()); // class_index
    out.extend_from_slice(&0u16.to_le_bytes()); // style_index
    for (ns, attr_name, value) in attrs {
        out.extend_from_slice(&ns.to_le_bytes());
        out.extend_from_slice(&attr_name.to_le_bytes());
        out.extend_from_slice(&value.to_le_bytes()); // raw value
        out.extend_from_slice(&8u16.to_le_bytes()); // typed value size
        out.push(0); // res0
        out.push(0x03); // TYPE_STRING
        out.extend_from_slice(&value.to_le_bytes());
    }
}

fn end_element(out: &mut Vec<u8>, name: u32) {
    out.extend_from_slice(&CHUNK_ELEM_END.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(&24u32.to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&u32::MAX.to_le_bytes());
    out.extend_from_slice(&u32::MAX.to_le_bytes());
    out.extend_from_slice(&name.to_le_bytes());
}
