//! Dalvik executable (dex) parsing.
//!
//! Reads the header, id tables, class definitions, and per-method code
//! items, decoding each instruction stream far enough to recover every
//! invocation target. Every read is bounds-checked: arbitrary input bytes
//! produce an error, never a panic or out-of-range access.

use thiserror::Error;

pub const ENDIAN_CONSTANT: u32 = 0x12345678;

#[derive(Debug, Error)]
pub enum DexError {
    #[error("bad dex magic or unsupported version (accepted: 035 through 039)")]
    BadMagic,
    #[error("unsupported endian tag 0x{0:08x}")]
    BadEndianTag(u32),
    #[error("{what} at offset {offset} runs past the end of the {len}-byte file")]
    OutOfBounds {
        what: &'static str,
        offset: usize,
        len: usize,
    },
    #[error("malformed ULEB128 in {what} at offset {offset}")]
    BadUleb { what: &'static str, offset: usize },
    #[error("invalid MUTF-8 string data at offset {offset}")]
    BadString { offset: usize },
    #[error("{what} index {index} out of range ({count} entries)")]
    BadIndex {
        what: &'static str,
        index: u32,
        count: usize,
    },
    #[error("unknown opcode 0x{opcode:02x} in {method} at code unit {unit}")]
    UnknownOpcode {
        opcode: u8,
        method: String,
        unit: usize,
    },
    #[error("bad payload ident 0x{ident:04x} in {method} at code unit {unit}")]
    BadPayload {
        ident: u16,
        method: String,
        unit: usize,
    },
    #[error("instruction in {method} at code unit {unit} overruns the stream")]
    InsnOverrun { method: String, unit: usize },
    #[error("method {0} has no code item")]
    NoBody(String),
    #[error("method {0} is not defined in this dex")]
    NotDefined(String),
}

/// Normalized method identity: dotted class name, method name, and the full
/// Dalvik descriptor. The triple is unique within one application.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId {
    pub class_name: String,
    pub method_name: String,
    pub descriptor: String,
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}{}", self.class_name, self.method_name, self.descriptor)
    }
}

/// Convert a Dalvik type descriptor to dotted form:
/// `Landroid/net/Uri;` → `android.net.Uri`, `[I` → `int[]`.
pub fn dotted_class(descriptor: &str) -> String {
    let mut dims = 0;
    let mut d = descriptor;
    while let Some(rest) = d.strip_prefix('[') {
        dims += 1;
        d = rest;
    }
    let base = if let Some(inner) = d.strip_prefix('L').and_then(|s| s.strip_suffix(';')) {
        inner.replace('/', ".")
    } else {
        match d {
            "V" => "void".to_string(),
            "Z" => "boolean".to_string(),
            "B" => "byte".to_string(),
            "S" => "short".to_string(),
            "C" => "char".to_string(),
            "I" => "int".to_string(),
            "J" => "long".to_string(),
            "F" => "float".to_string(),
            "D" => "double".to_string(),
            other => other.to_string(),
        }
    };
    format!("{}{}", base, "[]".repeat(dims))
}

#[derive(Debug, Clone)]
pub struct Proto {
    pub shorty: String,
    pub return_type: String,
    pub params: Vec<String>,
}

impl Proto {
    /// Full method descriptor, e.g. `(Ljava/lang/String;I)V`.
    pub fn descriptor(&self) -> String {
        let mut d = String::from("(");
        for p in &self.params {
            d.push_str(p);
        }
        d.push(')');
        d.push_str(&self.return_type);
        d
    }
}

/// One method_ids entry with indices resolved to strings.
#[derive(Debug, Clone)]
pub struct MethodRef {
    pub class_descriptor: String,
    pub name: String,
    pub descriptor: String,
}

impl MethodRef {
    pub fn id(&self) -> MethodId {
        MethodId {
            class_name: dotted_class(&self.class_descriptor),
            method_name: self.name.clone(),
            descriptor: self.descriptor.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvokeKind {
    Virtual,
    Super,
    Direct,
    Static,
    Interface,
}

impl InvokeKind {
    pub fn mnemonic(self, range: bool) -> &'static str {
        match (self, range) {
            (InvokeKind::Virtual, false) => "invoke-virtual",
            (InvokeKind::Super, false) => "invoke-super",
            (InvokeKind::Direct, false) => "invoke-direct",
            (InvokeKind::Static, false) => "invoke-static",
            (InvokeKind::Interface, false) => "invoke-interface",
            (InvokeKind::Virtual, true) => "invoke-virtual/range",
            (InvokeKind::Super, true) => "invoke-super/range",
            (InvokeKind::Direct, true) => "invoke-direct/range",
            (InvokeKind::Static, true) => "invoke-static/range",
            (InvokeKind::Interface, true) => "invoke-interface/range",
        }
    }
}

/// One decoded instruction, reduced to what the pipeline needs: invocation
/// targets plus a mnemonic for everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DexInsn {
    Invoke {
        kind: InvokeKind,
        range: bool,
        method_idx: u16,
    },
    /// invoke-polymorphic; target recorded but treated as opaque.
    InvokePolymorphic { range: bool, method_idx: u16 },
    /// invoke-custom; the index names a call site, not a method.
    InvokeCustom { range: bool, call_site_idx: u16 },
    Plain { mnemonic: &'static str },
    Payload { mnemonic: &'static str },
}

#[derive(Debug, Clone)]
pub struct CodeItem {
    pub registers_size: u16,
    pub ins_size: u16,
    pub outs_size: u16,
    pub insns: Vec<DexInsn>,
}

#[derive(Debug, Clone)]
pub struct DexMethod {
    pub method_idx: u32,
    pub access_flags: u32,
    pub code: Option<CodeItem>,
}

#[derive(Debug, Clone)]
pub struct ClassDef {
    pub class_descriptor: String,
    pub methods: Vec<DexMethod>,
}

#[derive(Debug, Clone)]
pub struct DexFile {
    pub strings: Vec<String>,
    pub types: Vec<String>,
    pub protos: Vec<Proto>,
    pub method_refs: Vec<MethodRef>,
    pub classes: Vec<ClassDef>,
}

impl DexFile {
    pub fn method_ref(&self, idx: u32) -> Option<&MethodRef> {
        self.method_refs.get(idx as usize)
    }

    /// Iterate defined methods as `(id, method)` pairs, in class-def order.
    pub fn defined_methods(&self) -> impl Iterator<Item = (MethodId, &DexMethod)> {
        self.classes.iter().flat_map(move |class| {
            class.methods.iter().filter_map(move |m| {
                self.method_ref(m.method_idx).map(|r| (r.id(), m))
            })
        })
    }

    /// Locate a defined method by identity, if this dex defines it.
    pub fn find_method(&self, id: &MethodId) -> Option<&DexMethod> {
        self.classes
            .iter()
            .flat_map(|c| &c.methods)
            .find(|m| match self.method_ref(m.method_idx) {
                Some(r) => r.id() == *id,
                None => false,
            })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn u16_at(&self, offset: usize, what: &'static str) -> Result<u16, DexError> {
        let end = offset.checked_add(2).ok_or(DexError::OutOfBounds {
            what,
            offset,
            len: self.bytes.len(),
        })?;
        if end > self.bytes.len() {
            return Err(DexError::OutOfBounds {
                what,
                offset,
                len: self.bytes.len(),
            });
        }
        Ok(u16::from_le_bytes([self.bytes[offset], self.bytes[offset + 1]]))
    }

    fn u32_at(&self, offset: usize, what: &'static str) -> Result<u32, DexError> {
        let end = offset.checked_add(4).ok_or(DexError::OutOfBounds {
            what,
            offset,
            len: self.bytes.len(),
        })?;
        if end > self.bytes.len() {
            return Err(DexError::OutOfBounds {
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

    /// ULEB128 at `offset`; returns (value, offset after). Capped at five
    /// bytes per the format.
    fn uleb_at(&self, offset: usize, what: &'static str) -> Result<(u32, usize), DexError> {
        let mut value: u32 = 0;
        let mut shift = 0;
        let mut pos = offset;
        loop {
            let byte = *self
                .bytes
                .get(pos)
                .ok_or(DexError::BadUleb { what, offset })?;
            if shift >= 32 {
                return Err(DexError::BadUleb { what, offset });
            }
            value |= ((byte & 0x7f) as u32) << shift;
            pos += 1;
            if byte & 0x80 == 0 {
                return Ok((value, pos));
            }
            shift += 7;
            if pos - offset >= 5 {
                return Err(DexError::BadUleb { what, offset });
            }
        }
    }

    /// Range check for a table of `count` records of `record_size` bytes.
    fn check_table(
        &self,
        offset: u32,
        count: u32,
        record_size: u64,
        what: &'static str,
    ) -> Result<(), DexError> {
        let end = offset as u64 + count as u64 * record_size;
        if end > self.bytes.len() as u64 {
            return Err(DexError::OutOfBounds {
                what,
                offset: offset as usize,
                len: self.bytes.len(),
            });
        }
        Ok(())
    }
}

/// MUTF-8 (CESU-8 with two-byte NUL) decoding; surrogate pairs recombine via
/// UTF-16 validation.
fn decode_mutf8(bytes: &[u8]) -> Option<String> {
    let mut units: Vec<u16> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b < 0x80 {
            if b == 0 {
                return None; // plain NUL must be encoded as 0xC0 0x80
            }
            units.push(b as u16);
            i += 1;
        } else if b & 0xe0 == 0xc0 {
            let b2 = *bytes.get(i + 1)?;
            if b2 & 0xc0 != 0x80 {
                return None;
            }
            units.push((((b & 0x1f) as u16) << 6) | (b2 & 0x3f) as u16);
            i += 2;
        } else if b & 0xf0 == 0xe0 {
            let b2 = *bytes.get(i + 1)?;
            let b3 = *bytes.get(i + 2)?;
            if b2 & 0xc0 != 0x80 || b3 & 0xc0 != 0x80 {
                return None;
            }
            units.push(
                (((b & 0x0f) as u16) << 12)
                    | (((b2 & 0x3f) as u16) << 6)
                    | (b3 & 0x3f) as u16,
            );
            i += 3;
        } else {
            return None;
        }
    }
    String::from_utf16(&units).ok()
}

/// Mnemonic and code-unit length for every defined non-payload opcode.
fn opcode_info(op: u8) -> Option<(&'static str, usize)> {
    const UNOPS: [&str; 21] = [
        "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
        "int-to-long", "int-to-float", "int-to-double", "long-to-int", "long-to-float",
        "long-to-double", "float-to-int", "float-to-long", "float-to-double",
        "double-to-int", "double-to-long", "double-to-float", "int-to-byte",
        "int-to-char", "int-to-short",
    ];
    const BINOPS: [&str; 32] = [
        "add-int", "sub-int", "mul-int", "div-int", "rem-int", "and-int", "or-int",
        "xor-int", "shl-int", "shr-int", "ushr-int", "add-long", "sub-long", "mul-long",
        "div-long", "rem-long", "and-long", "or-long", "xor-long", "shl-long",
        "shr-long", "ushr-long", "add-float", "sub-float", "mul-float", "div-float",
        "rem-float", "add-double", "sub-double", "mul-double", "div-double",
        "rem-double",
    ];
    const BINOPS_2ADDR: [&str; 32] = [
        "add-int/2addr", "sub-int/2addr", "mul-int/2addr", "div-int/2addr",
        "rem-int/2addr", "and-int/2addr", "or-int/2addr", "xor-int/2addr",
        "shl-int/2addr", "shr-int/2addr", "ushr-int/2addr", "add-long/2addr",
        "sub-long/2addr", "mul-long/2addr", "div-long/2addr", "rem-long/2addr",
        "and-long/2addr", "or-long/2addr", "xor-long/2addr", "shl-long/2addr",
        "shr-long/2addr", "ushr-long/2addr", "add-float/2addr", "sub-float/2addr",
        "mul-float/2addr", "div-float/2addr", "rem-float/2addr", "add-double/2addr",
        "sub-double/2addr", "mul-double/2addr", "div-double/2addr", "rem-double/2addr",
    ];
    const LIT16: [&str; 8] = [
        "add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16", "rem-int/lit16",
        "and-int/lit16", "or-int/lit16", "xor-int/lit16",
    ];
    const LIT8: [&str; 11] = [
        "add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8", "rem-int/lit8",
        "and-int/lit8", "or-int/lit8", "xor-int/lit8", "shl-int/lit8", "shr-int/lit8",
        "ushr-int/lit8",
    ];
    const ARRAY_OPS: [&str; 14] = [
        "aget", "aget-wide", "aget-object", "aget-boolean", "aget-byte", "aget-char",
        "aget-short", "aput", "aput-wide", "aput-object", "aput-boolean", "aput-byte",
        "aput-char", "aput-short",
    ];
    const IFIELD_OPS: [&str; 14] = [
        "iget", "iget-wide", "iget-object", "iget-boolean", "iget-byte", "iget-char",
        "iget-short", "iput", "iput-wide", "iput-object", "iput-boolean", "iput-byte",
        "iput-char", "iput-short",
    ];
    const SFIELD_OPS: [&str; 14] = [
        "sget", "sget-wide", "sget-object", "sget-boolean", "sget-byte", "sget-char",
        "sget-short", "sput", "sput-wide", "sput-object", "sput-boolean", "sput-byte",
        "sput-char", "sput-short",
    ];
    const IF_TEST: [&str; 6] = ["if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le"];
    const IF_TESTZ: [&str; 6] = ["if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez"];

    Some(match op {
        0x00 => ("nop", 1),
        0x01 => ("move", 1),
        0x02 => ("move/from16", 2),
        0x03 => ("move/16", 3),
        0x04 => ("move-wide", 1),
        0x05 => ("move-wide/from16", 2),
        0x06 => ("move-wide/16", 3),
        0x07 => ("move-object", 1),
        0x08 => ("move-object/from16", 2),
        0x09 => ("move-object/16", 3),
        0x0a => ("move-result", 1),
        0x0b => ("move-result-wide", 1),
        0x0c => ("move-result-object", 1),
        0x0d => ("move-exception", 1),
        0x0e => ("return-void", 1),
        0x0f => ("return", 1),
        0x10 => ("return-wide", 1),
        0x11 => ("return-object", 1),
        0x12 => ("const/4", 1),
        0x13 => ("const/16", 2),
        0x14 => ("const", 3),
        0x15 => ("const/high16", 2),
        0x16 => ("const-wide/16", 2),
        0x17 => ("const-wide/32", 3),
        0x18 => ("const-wide", 5),
        0x19 => ("const-wide/high16", 2),
        0x1a => ("const-string", 2),
        0x1b => ("const-string/jumbo", 3),
        0x1c => ("const-class", 2),
        0x1d => ("monitor-enter", 1),
        0x1e => ("monitor-exit", 1),
        0x1f => ("check-cast", 2),
        0x20 => ("instance-of", 2),
        0x21 => ("array-length", 1),
        0x22 => ("new-instance", 2),
        0x23 => ("new-array", 2),
        0x24 => ("filled-new-array", 3),
        0x25 => ("filled-new-array/range", 3),
        0x26 => ("fill-array-data", 3),
        0x27 => ("throw", 1),
        0x28 => ("goto", 1),
        0x29 => ("goto/16", 2),
        0x2a => ("goto/32", 3),
        0x2b => ("packed-switch", 3),
        0x2c => ("sparse-switch", 3),
        0x2d => ("cmpl-float", 2),
        0x2e => ("cmpg-float", 2),
        0x2f => ("cmpl-double", 2),
        0x30 => ("cmpg-double", 2),
        0x31 => ("cmp-long", 2),
        0x32..=0x37 => (IF_TEST[(op - 0x32) as usize], 2),
        0x38..=0x3d => (IF_TESTZ[(op - 0x38) as usize], 2),
        0x44..=0x51 => (ARRAY_OPS[(op - 0x44) as usize], 2),
        0x52..=0x5f => (IFIELD_OPS[(op - 0x52) as usize], 2),
        0x60..=0x6d => (SFIELD_OPS[(op - 0x60) as usize], 2),
        // invokes are decoded separately; lengths listed for completeness
        0x6e..=0x72 => ("invoke", 3),
        0x74..=0x78 => ("invoke/range", 3),
        0x7b..=0x8f => (UNOPS[(op - 0x7b) as usize], 1),
        0x90..=0xaf => (BINOPS[(op - 0x90) as usize], 2),
        0xb0..=0xcf => (BINOPS_2ADDR[(op - 0xb0) as usize], 1),
        0xd0..=0xd7 => (LIT16[(op - 0xd0) as usize], 2),
        0xd8..=0xe2 => (LIT8[(op - 0xd8) as usize], 2),
        0xfa => ("invoke-polymorphic", 4),
        0xfb => ("invoke-polymorphic/range", 4),
        0xfc => ("invoke-custom", 3),
        0xfd => ("invoke-custom/range", 3),
        0xfe => ("const-method-handle", 2),
        0xff => ("const-method-type", 2),
        _ => return None, // 0x3e-0x43, 0x73, 0x79, 0x7a, 0xe3-0xf9 are unused
    })
}

fn decode_insns(
    units: &[u16],
    method_count: usize,
    method_name: &str,
) -> Result<Vec<DexInsn>, DexError> {
    let mut out = Vec::new();
    let mut unit = 0usize;
    let overrun = |unit| DexError::InsnOverrun {
        method: method_name.to_string(),
        unit,
    };
    while unit < units.len() {
        let u0 = units[unit];
        let op = (u0 & 0xff) as u8;
        if op == 0x00 && u0 >> 8 != 0 {
            // payload pseudo-instructions
            let ident = u0 >> 8;
            let len = match ident {
                0x01 => {
                    let size = *units.get(unit + 1).ok_or_else(|| overrun(unit))? as usize;
                    size * 2 + 4
                }
                0x02 => {
                    let size = *units.get(unit + 1).ok_or_else(|| overrun(unit))? as usize;
                    size * 4 + 2
                }
                0x03 => {
                    if unit + 4 > units.len() {
                        return Err(overrun(unit));
                    }
                    let width = units[unit + 1] as usize;
                    let size = units[unit + 2] as usize | ((units[unit + 3] as usize) << 16);
                    (size * width).div_ceil(2) + 4
                }
                other => {
                    return Err(DexError::BadPayload {
                        ident: other,
                        method: method_name.to_string(),
                        unit,
                    })
                }
            };
            if unit + len > units.len() {
                return Err(overrun(unit));
            }
            out.push(DexInsn::Payload {
                mnemonic: match ident {
                    0x01 => "packed-switch-payload",
                    0x02 => "sparse-switch-payload",
                    _ => "fill-array-data-payload",
                },
            });
            unit += len;
            continue;
        }
        match op {
            0x6e..=0x72 | 0x74..=0x78 => {
                if unit + 3 > units.len() {
                    return Err(overrun(unit));
                }
                let method_idx = units[unit + 1];
                if (method_idx as usize) >= method_count {
                    return Err(DexError::BadIndex {
                        what: "method",
                        index: method_idx as u32,
                        count: method_count,
                    });
                }
                let range = op >= 0x74;
                let kind = match if range { op - 0x74 } else { op - 0x6e } {
                    0 => InvokeKind::Virtual,
                    1 => InvokeKind::Super,
                    2 => InvokeKind::Direct,
                    3 => InvokeKind::Static,
                    _ => InvokeKind::Interface,
                };
                out.push(DexInsn::Invoke {
                    kind,
                    range,
                    method_idx,
                });
                unit += 3;
            }
            0xfa | 0xfb => {
                if unit + 4 > units.len() {
                    return Err(overrun(unit));
                }
                let method_idx = units[unit + 1];
                if (method_idx as usize) >= method_count {
                    return Err(DexError::BadIndex {
                        what: "method",
                        index: method_idx as u32,
                        count: method_count,
                    });
                }
                out.push(DexInsn::InvokePolymorphic {
                    range: op == 0xfb,
                    method_idx,
                });
                unit += 4;
            }
            0xfc | 0xfd => {
                if unit + 3 > units.len() {
                    return Err(overrun(unit));
                }
                out.push(DexInsn::InvokeCustom {
                    range: op == 0xfd,
                    call_site_idx: units[unit + 1],
                });
                unit += 3;
            }
            _ => {
                let (mnemonic, len) = opcode_info(op).ok_or(DexError::UnknownOpcode {
                    opcode: op,
                    method: method_name.to_string(),
                    unit,
                })?;
                if unit + len > units.len() {
                    return Err(overrun(unit));
                }
                out.push(DexInsn::Plain { mnemonic });
                unit += len;
            }
        }
    }
    Ok(out)
}

pub fn parse_dex(bytes: &[u8]) -> Result<DexFile, DexError> {
    let r = Reader { bytes };
    if bytes.len() < 8
        || &bytes[0..4] != b"dex\n"
        || bytes[4] != b'0'
        || bytes[5] != b'3'
        || !(b'5'..=b'9').contains(&bytes[6])
        || bytes[7] != 0
    {
        return Err(DexError::BadMagic);
    }
    if bytes.len() < 0x70 {
        return Err(DexError::OutOfBounds {
            what: "header",
            offset: 0,
            len: bytes.len(),
        });
    }
    let endian_tag = r.u32_at(0x28, "endian tag")?;
    if endian_tag != ENDIAN_CONSTANT {
        return Err(DexError::BadEndianTag(endian_tag));
    }

    let string_ids_size = r.u32_at(0x38, "string_ids_size")?;
    let string_ids_off = r.u32_at(0x3c, "string_ids_off")?;
    let type_ids_size = r.u32_at(0x40, "type_ids_size")?;
    let type_ids_off = r.u32_at(0x44, "type_ids_off")?;
    let proto_ids_size = r.u32_at(0x48, "proto_ids_size")?;
    let proto_ids_off = r.u32_at(0x4c, "proto_ids_off")?;
    let method_ids_size = r.u32_at(0x58, "method_ids_size")?;
    let method_ids_off = r.u32_at(0x5c, "method_ids_off")?;
    let class_defs_size = r.u32_at(0x60, "class_defs_size")?;
    let class_defs_off = r.u32_at(0x64, "class_defs_off")?;

    r.check_table(string_ids_off, string_ids_size, 4, "string_ids table")?;
    r.check_table(type_ids_off, type_ids_size, 4, "type_ids table")?;
    r.check_table(proto_ids_off, proto_ids_size, 12, "proto_ids table")?;
    r.check_table(method_ids_off, method_ids_size, 8, "method_ids table")?;
    r.check_table(class_defs_off, class_defs_size, 32, "class_defs table")?;

    // strings
    let mut strings = Vec::with_capacity(string_ids_size as usize);
    for i in 0..string_ids_size {
        let id_off = string_ids_off as usize + 4 * i as usize;
        let data_off = r.u32_at(id_off, "string_id")? as usize;
        let (_utf16_size, text_off) = r.uleb_at(data_off, "string utf16_size")?;
        let terminator = bytes[text_off..]
            .iter()
            .position(|&b| b == 0)
            .ok_or(DexError::OutOfBounds {
                what: "string data",
                offset: text_off,
                len: bytes.len(),
            })?;
        let text = decode_mutf8(&bytes[text_off..text_off + terminator])
            .ok_or(DexError::BadString { offset: text_off })?;
        strings.push(text);
    }

    // types
    let mut types = Vec::with_capacity(type_ids_size as usize);
    for i in 0..type_ids_size {
        let idx = r.u32_at(type_ids_off as usize + 4 * i as usize, "type_id")?;
        let s = strings.get(idx as usize).ok_or(DexError::BadIndex {
            what: "string",
            index: idx,
            count: strings.len(),
        })?;
        types.push(s.clone());
    }

    // protos
    let mut protos = Vec::with_capacity(proto_ids_size as usize);
    for i in 0..proto_ids_size {
        let off = proto_ids_off as usize + 12 * i as usize;
        let shorty_idx = r.u32_at(off, "proto shorty_idx")?;
        let return_idx = r.u32_at(off + 4, "proto return_type_idx")?;
        let params_off = r.u32_at(off + 8, "proto parameters_off")?;
        let shorty = strings
            .get(shorty_idx as usize)
            .ok_or(DexError::BadIndex {
                what: "string",
                index: shorty_idx,
                count: strings.len(),
            })?
            .clone();
        let return_type = types
            .get(return_idx as usize)
            .ok_or(DexError::BadIndex {
                what: "type",
                index: return_idx,
                count: types.len(),
            })?
            .clone();
        let mut params = Vec::new();
        if params_off != 0 {
            let count = r.u32_at(params_off as usize, "type_list size")?;
            r.check_table(params_off + 4, count, 2, "type_list entries")?;
            for j in 0..count {
                let idx = r.u16_at(params_off as usize + 4 + 2 * j as usize, "type_list entry")?;
                let ty = types.get(idx as usize).ok_or(DexError::BadIndex {
                    what: "type",
                    index: idx as u32,
                    count: types.len(),
                })?;
                params.push(ty.clone());
            }
        }
        protos.push(Proto {
            shorty,
            return_type,
            params,
        });
    }

    // method refs
    let mut method_refs = Vec::with_capacity(method_ids_size as usize);
    for i in 0..method_ids_size {
        let off = method_ids_off as usize + 8 * i as usize;
        let class_idx = r.u16_at(off, "method class_idx")?;
        let proto_idx = r.u16_at(off + 2, "method proto_idx")?;
        let name_idx = r.u32_at(off + 4, "method name_idx")?;
        let class_descriptor = types
            .get(class_idx as usize)
            .ok_or(DexError::BadIndex {
                what: "type",
                index: class_idx as u32,
                count: types.len(),
            })?
            .clone();
        let proto = protos.get(proto_idx as usize).ok_or(DexError::BadIndex {
            what: "proto",
            index: proto_idx as u32,
            count: protos.len(),
        })?;
        let name = strings
            .get(name_idx as usize)
            .ok_or(DexError::BadIndex {
                what: "string",
                index: name_idx,
                count: strings.len(),
            })?
            .clone();
        method_refs.push(MethodRef {
            class_descriptor,
            name,
            descriptor: proto.descriptor(),
        });
    }

    // class defs and their class_data
    let mut classes = Vec::with_capacity(class_defs_size as usize);
    for i in 0..class_defs_size {
        let off = class_defs_off as usize + 32 * i as usize;
        let class_idx = r.u32_at(off, "class_def class_idx")?;
        let class_data_off = r.u32_at(off + 24, "class_def class_data_off")?;
        let class_descriptor = types
            .get(class_idx as usize)
            .ok_or(DexError::BadIndex {
                what: "type",
                index: class_idx,
                count: types.len(),
            })?
            .clone();
        let mut methods = Vec::new();
        if class_data_off != 0 {
            let mut pos = class_data_off as usize;
            let (static_fields, p) = r.uleb_at(pos, "class_data static_fields_size")?;
            pos = p;
            let (instance_fields, p) = r.uleb_at(pos, "class_data instance_fields_size")?;
            pos = p;
            let (direct_methods, p) = r.uleb_at(pos, "class_data direct_methods_size")?;
            pos = p;
            let (virtual_methods, p) = r.uleb_at(pos, "class_data virtual_methods_size")?;
            pos = p;
            for _ in 0..static_fields.saturating_add(instance_fields) {
                let (_, p) = r.uleb_at(pos, "encoded_field idx_diff")?;
                let (_, p2) = r.uleb_at(p, "encoded_field access_flags")?;
                pos = p2;
            }
            for bucket_size in [direct_methods, virtual_methods] {
                let mut method_idx = 0u32;
                for _ in 0..bucket_size {
                    let (diff, p) = r.uleb_at(pos, "encoded_method idx_diff")?;
                    let (access_flags, p2) = r.uleb_at(p, "encoded_method access_flags")?;
                    let (code_off, p3) = r.uleb_at(p2, "encoded_method code_off")?;
                    pos = p3;
                    method_idx = method_idx.saturating_add(diff);
                    let method_ref =
                        method_refs
                            .get(method_idx as usize)
                            .ok_or(DexError::BadIndex {
                                what: "method",
                                index: method_idx,
                                count: method_refs.len(),
                            })?;
                    let full_name = format!(
                        "{}.{}",
                        dotted_class(&method_ref.class_descriptor),
                        method_ref.name
                    );
                    let code = if code_off == 0 {
                        None
                    } else {
                        let c = code_off as usize;
                        let registers_size = r.u16_at(c, "code_item registers_size")?;
                        let ins_size = r.u16_at(c + 2, "code_item ins_size")?;
                        let outs_size = r.u16_at(c + 4, "code_item outs_size")?;
                        let insns_size = r.u32_at(c + 12, "code_item insns_size")?;
                        r.check_table((c + 16) as u32, insns_size, 2, "code_item insns")?;
                        let mut units = Vec::with_capacity(insns_size as usize);
                        for u in 0..insns_size as usize {
                            units.push(r.u16_at(c + 16 + 2 * u, "code unit")?);
                        }
                        let insns = decode_insns(&units, method_refs.len(), &full_name)?;
                        Some(CodeItem {
                            registers_size,
                            ins_size,
                            outs_size,
                            insns,
                        })
                    };
                    methods.push(DexMethod {
                        method_idx,
                        access_flags,
                        code,
                    });
                }
            }
        }
        classes.push(ClassDef {
            class_descriptor,
            methods,
        });
    }

    Ok(DexFile {
        strings,
        types,
        protos,
        method_refs,
        classes,
    })
}

/// Render a defined method's body as a one-instruction-per-line listing with
/// symbolic callee names. Deterministic for identical input bytes.
pub fn render_method(dex: &DexFile, id: &MethodId) -> Result<String, DexError> {
    let method = dex
        .find_method(id)
        .ok_or_else(|| DexError::NotDefined(id.to_string()))?;
    let code = method
        .code
        .as_ref()
        .ok_or_else(|| DexError::NoBody(id.to_string()))?;
    let mut lines = Vec::with_capacity(code.insns.len());
    for insn in &code.insns {
        let line = match insn {
            DexInsn::Invoke {
                kind,
                range,
                method_idx,
            } => {
                let target = dex.method_ref(*method_idx as u32);
                match target {
                    Some(r) => format!(
                        "{} {}.{}{}",
                        kind.mnemonic(*range),
                        dotted_class(&r.class_descriptor),
                        r.name,
                        r.descriptor
                    ),
                    None => format!("{} method@{}", kind.mnemonic(*range), method_idx),
                }
            }
            DexInsn::InvokePolymorphic { range, method_idx } => {
                let mnemonic = if *range {
                    "invoke-polymorphic/range"
                } else {
                    "invoke-polymorphic"
                };
                match dex.method_ref(*method_idx as u32) {
                    Some(r) => format!(
                        "{} {}.{}{}",
                        mnemonic,
                        dotted_class(&r.class_descriptor),
                        r.name,
                        r.descriptor
                    ),
                    None => format!("{mnemonic} method@{method_idx}"),
                }
            }
            DexInsn::InvokeCustom {
                range,
                call_site_idx,
            } => {
                let mnemonic = if *range {
                    "invoke-custom/range"
                } else {
                    "invoke-custom"
                };
                format!("{mnemonic} call_site@{call_site_idx}")
            }
            DexInsn::Plain { mnemonic } | DexInsn::Payload { mnemonic } => mnemonic.to_string(),
        };
        lines.push(line);
    }
    Ok(lines.join("\n"))
}
