//! Byte-level builder for minimal but well-formed dex files.
//!
//! The builder assembles header, id tables, class defs, class data, and code
//! items directly from the published layout, and records a ledger of every
//! method it emitted together with the invocations placed in its body. Tests
//! use the ledger as ground truth when checking the dex parser and the call
//! graph construction, so this code intentionally shares nothing with the
//! parser under test.

/// Target of an invoke instruction, in dotted-class form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DexMethodRef {
    pub class_dotted: String,
    pub name: String,
    pub descriptor: String,
}

/// What the builder knows about one defined method.
#[derive(Debug, Clone)]
pub struct MethodLedger {
    pub class_dotted: String,
    pub name: String,
    pub descriptor: String,
    pub has_code: bool,
    /// Invocations in body order: (callee, invoke mnemonic).
    pub invokes: Vec<(DexMethodRef, &'static str)>,
    /// Number of instructions in the body (payloads count as one).
    pub instruction_count: usize,
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
    fn opcode(self, range: bool) -> u8 {
        match (self, range) {
            (InvokeKind::Virtual, false) => 0x6e,
            (InvokeKind::Super, false) => 0x6f,
            (InvokeKind::Direct, false) => 0x70,
            (InvokeKind::Static, false) => 0x71,
            (InvokeKind::Interface, false) => 0x72,
            (InvokeKind::Virtual, true) => 0x74,
            (InvokeKind::Super, true) => 0x75,
            (InvokeKind::Direct, true) => 0x76,
            (InvokeKind::Static, true) => 0x77,
            (InvokeKind::Interface, true) => 0x78,
        }
    }

    fn mnemonic(self, range: bool) -> &'static str {
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

/// Body instruction as the builder understands it.
#[derive(Debug, Clone)]
pub enum Insn {
    Nop,
    ReturnVoid,
    /// const/4 vA, #+B
    Const4 { reg: u8, value: i8 },
    /// move-result-object vAA
    MoveResultObject { reg: u8 },
    Invoke {
        kind: InvokeKind,
        range: bool,
        args: Vec<u16>,
        target: MethodKey,
    },
    /// Raw code units appended verbatim.
    Raw(Vec<u16>),
}

/// Symbolic method reference used while building.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodKey {
    pub class: String,
    pub name: String,
    pub params: Vec<String>,
    pub ret: String,
}

impl MethodKey {
    pub fn new(class: &str, name: &str, params: &[&str], ret: &str) -> Self {
        MethodKey {
            class: class.to_string(),
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            ret: ret.to_string(),
        }
    }

    fn descriptor(&self) -> String {
        let mut d = String::from("(");
        for p in &self.params {
            d.push_str(p);
        }
        d.push(')');
        d.push_str(&self.ret);
        d
    }
}

fn dotted(descriptor: &str) -> String {
    let mut suffix = String::new();
    let mut d = descriptor;
    while let Some(rest) = d.strip_prefix('[') {
        suffix.push_str("[]");
        d = rest;
    }
    let base = if let Some(inner) = d.strip_prefix('L').and_then(|s| s.strip_suffix(';')) {
        inner.replace('/', ".")
    } else {
        match d {
            "V" => "void",
            "Z" => "boolean",
            "B" => "byte",
            "S" => "short",
            "C" => "char",
            "I" => "int",
            "J" => "long",
            "F" => "float",
            "D" => "double",
            other => other,
        }
        .to_string()
    };
    format!("{base}{suffix}")
}

fn shorty_char(descriptor: &str) -> char {
    match descriptor.chars().next().unwrap_or('V') {
        'L' | '[' => 'L',
        c => c,
    }
}

struct BuiltMethod {
    key: MethodKey,
    direct: bool,
    code: Option<CodeSpec>,
}

#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub registers: u16,
    pub ins: u16,
    pub outs: u16,
    pub insns: Vec<Insn>,
}

impl CodeSpec {
    pub fn simple(insns: Vec<Insn>) -> Self {
        CodeSpec {
            registers: 6,
            ins: 1,
            outs: 5,
            insns,
        }
    }
}

/// Builder for one dex file.
#[derive(Default)]
pub struct DexBuilder {
    classes: Vec<String>,
    methods: Vec<BuiltMethod>,
}

impl DexBuilder {
    pub fn new() -> Self {
        DexBuilder::default()
    }

    /// Declare a class that will own defined methods.
    pub fn class(&mut self, descriptor: &str) -> &mut Self {
        if !self.classes.contains(&descriptor.to_string()) {
            self.classes.push(descriptor.to_string());
        }
        self
    }

    /// Add a defined method with an optional body.
    pub fn method(&mut self, key: MethodKey, code: Option<CodeSpec>) -> &mut Self {
        self.class(&key.class.clone());
        self.methods.push(BuiltMethod {
            key,
            direct: false,
            code,
        });
        self
    }

    /// Convenience: defined method whose body performs the given invokes and
    /// returns void.
    pub fn method_calling(&mut self, key: MethodKey, calls: &[(InvokeKind, MethodKey)]) -> &mut Self {
        let mut insns = vec![Insn::Const4 { reg: 0, value: 0 }];
        for (kind, target) in calls {
            insns.push(Insn::Invoke {
                kind: *kind,
                range: false,
                args: vec![0],
                target: target.clone(),
            });
        }
        insns.push(Insn::ReturnVoid);
        self.method(key, Some(CodeSpec::simple(insns)))
    }

    /// Assemble the dex bytes plus the ledger of defined methods.
    pub fn build(&self) -> (Vec<u8>, Vec<MethodLedger>) {
        // -- symbol collection ------------------------------------------------
        let mut strings: Vec<String> = Vec::new();
        let mut types: Vec<String> = Vec::new();
        let mut protos: Vec<(String, String, Vec<String>)> = Vec::new();
        let mut method_keys: Vec<MethodKey> = Vec::new();

        let add_string = |pool: &mut Vec<String>, s: &str| {
            if !pool.contains(&s.to_string()) {
                pool.push(s.to_string());
            }
        };
        let add_type = |pool: &mut Vec<String>, s: &str| {
            if !pool.contains(&s.to_string()) {
                pool.push(s.to_string());
            }
        };

        let object = "Ljava/lang/Object;".to_string();
        add_type(&mut types, &object);
        for class in &self.classes {
            add_type(&mut types, class);
        }
        for m in &self.methods {
            method_keys.push(m.key.clone());
        }
        for m in &self.methods {
            if let Some(code) = &m.code {
                for insn in &code.insns {
                    if let Insn::Invoke { target, .. } = insn {
                        if !method_keys.contains(target) {
                            method_keys.push(target.clone());
                        }
                    }
                }
            }
        }
        for key in &method_keys {
            add_type(&mut types, &key.class);
            add_type(&mut types, &key.ret);
            for p in &key.params {
                add_type(&mut types, p);
            }
            let mut shorty = String::new();
            shorty.push(shorty_char(&key.ret));
            for p in &key.params {
                shorty.push(shorty_char(p));
            }
            let proto = (shorty, key.ret.clone(), key.params.clone());
            if !protos.contains(&proto) {
                protos.push(proto);
            }
        }
        types.sort();
        protos.sort();
        for t in &types {
            add_string(&mut strings, t);
        }
        for (shorty, _, _) in &protos {
            add_string(&mut strings, shorty);
        }
        for key in &method_keys {
            add_string(&mut strings, &key.name);
        }
        strings.sort();

        let string_idx = |s: &str| strings.iter().position(|x| x == s).unwrap() as u32;
        let type_idx = |s: &str| types.iter().position(|x| x == s).unwrap() as u32;
        let proto_idx = |key: &MethodKey| {
            let mut shorty = String::new();
            shorty.push(shorty_char(&key.ret));
            for p in &key.params {
                shorty.push(shorty_char(p));
            }
            protos
                .iter()
                .position(|(s, r, p)| *s == shorty && *r == key.ret && *p == key.params)
                .unwrap() as u32
        };

        // method_ids must be sorted by (class_idx, name_idx, proto_idx)
        method_keys.sort_by_key(|k| (type_idx(&k.class), string_idx(&k.name), proto_idx(k)));
        let method_idx =
            |key: &MethodKey| method_keys.iter().position(|x| x == key).unwrap() as u32;

        // -- data section -----------------------------------------------------
        let header_size = 0x70u32;
        let string_ids_off = header_size;
        let type_ids_off = string_ids_off + 4 * strings.len() as u32;
        let proto_ids_off = type_ids_off + 4 * types.len() as u32;
        let method_ids_off = proto_ids_off + 12 * protos.len() as u32;
        let class_defs_off = method_ids_off + 8 * method_keys.len() as u32;
        let data_off = class_defs_off + 32 * self.classes.len() as u32;

        let mut data: Vec<u8> = Vec::new();
        let align4 = |data: &mut Vec<u8>| {
            while data.len() % 4 != 0 {
                data.push(0);
            }
        };

        // type lists for protos with parameters
        let mut type_list_offs: Vec<u32> = Vec::new();
        for (_, _, params) in &protos {
            if params.is_empty() {
                type_list_offs.push(0);
                continue;
            }
            align4(&mut data);
            type_list_offs.push(data_off + data.len() as u32);
            data.extend_from_slice(&(params.len() as u32).to_le_bytes());
            for p in params {
                data.extend_from_slice(&(type_idx(p) as u16).to_le_bytes());
            }
        }

        // code items
        let mut ledgers: Vec<MethodLedger> = Vec::new();
        let mut code_offs: Vec<(usize, u32)> = Vec::new(); // (method slot in self.methods, off)
        for (slot, m) in self.methods.iter().enumerate() {
            let mut ledger = MethodLedger {
                class_dotted: dotted(&m.key.class),
                name: m.key.name.clone(),
                descriptor: m.key.descriptor(),
                has_code: m.code.is_some(),
                invokes: Vec::new(),
                instruction_count: 0,
            };
            if let Some(code) = &m.code {
                align4(&mut data);
                let off = data_off + data.len() as u32;
                code_offs.push((slot, off));
                let mut units: Vec<u16> = Vec::new();
                for insn in &code.insns {
                    ledger.instruction_count += 1;
                    match insn {
                        Insn::Nop => units.push(0x0000),
                        Insn::ReturnVoid => units.push(0x000e),
                        Insn::Const4 { reg, value } => {
                            let nibble = (*value as u8) & 0x0f;
                            units.push(((nibble as u16) << 12) | ((*reg as u16 & 0xf) << 8) | 0x12);
                        }
                        Insn::MoveResultObject { reg } => {
                            units.push(((*reg as u16) << 8) | 0x0c);
                        }
                        Insn::Invoke {
                            kind,
                            range,
                            args,
                            target,
                        } => {
                            let op = kind.opcode(*range) as u16;
                            let idx = method_idx(target) as u16;
                            if *range {
                                units.push(((args.len() as u16) << 8) | op);
                                units.push(idx);
                                units.push(args.first().copied().unwrap_or(0));
                            } else {
                                assert!(args.len() <= 5, "35c takes at most five registers");
                                let a = args.len() as u16;
                                let g = if args.len() == 5 { args[4] & 0xf } else { 0 };
                                units.push((a << 12) | (g << 8) | op);
                                units.push(idx);
                                let mut regs = 0u16;
                                for (i, r) in args.iter().take(4).enumerate() {
                                    regs |= (r & 0xf) << (4 * i);
                                }
                                units.push(regs);
                            }
                            ledger.invokes.push((
                                DexMethodRef {
                                    class_dotted: dotted(&target.class),
                                    name: target.name.clone(),
                                    descriptor: target.descriptor(),
                                },
                                kind.mnemonic(*range),
                            ));
                        }
                        Insn::Raw(raw) => units.extend_from_slice(raw),
                    }
                }
                data.extend_from_slice(&code.registers.to_le_bytes());
                data.extend_from_slice(&code.ins.to_le_bytes());
                data.extend_from_slice(&code.outs.to_le_bytes());
                data.extend_from_slice(&0u16.to_le_bytes()); // tries_size
                data.extend_from_slice(&0u32.to_le_bytes()); // debug_info_off
                data.extend_from_slice(&(units.len() as u32).to_le_bytes());
                for u in units {
                    data.extend_from_slice(&u.to_le_bytes());
                }
            }
            ledgers.push(ledger);
        }

        // class_data items
        let mut class_data_offs: Vec<u32> = Vec::new();
        for class in &self.classes {
            let mut members: Vec<(usize, &BuiltMethod)> = self
                .methods
                .iter()
                .enumerate()
                .filter(|(_, m)| &m.key.class == class)
                .collect();
            if members.is_empty() {
                class_data_offs.push(0);
                continue;
            }
            members.sort_by_key(|(_, m)| method_idx(&m.key));
            class_data_offs.push(data_off + data.len() as u32);
            let direct: Vec<_> = members.iter().filter(|(_, m)| m.direct).collect();
            let virt: Vec<_> = members.iter().filter(|(_, m)| !m.direct).collect();
            write_uleb(&mut data, 0); // static fields
            write_uleb(&mut data, 0); // instance fields
            write_uleb(&mut data, direct.len() as u32);
            write_uleb(&mut data, virt.len() as u32);
            for bucket in [direct, virt] {
                let mut prev = 0u32;
                for (slot, m) in bucket {
                    let idx = method_idx(&m.key);
                    write_uleb(&mut data, idx - prev);
                    prev = idx;
                    write_uleb(&mut data, 0x1); // ACC_PUBLIC
                    let code_off = code_offs
                        .iter()
                        .find(|(s, _)| s == slot)
                        .map(|(_, off)| *off)
                        .unwrap_or(0);
                    write_uleb(&mut data, code_off);
                }
            }
        }

        // string data
        let mut string_data_offs: Vec<u32> = Vec::new();
        for s in &strings {
            string_data_offs.push(data_off + data.len() as u32);
            write_uleb(&mut data, s.chars().map(char::len_utf16).sum::<usize>() as u32);
            data.extend_from_slice(s.as_bytes()); // ascii-only pool: mutf-8 == utf-8
            data.push(0);
        }

        // -- assembly ---------------------------------------------------------
        let file_size = data_off + data.len() as u32;
        let mut out: Vec<u8> = Vec::with_capacity(file_size as usize);
        out.extend_from_slice(b"dex\n035\0");
        out.extend_from_slice(&0u32.to_le_bytes()); // checksum patched below
        out.extend_from_slice(&[0u8; 20]); // signature left zeroed
        out.extend_from_slice(&file_size.to_le_bytes());
        out.extend_from_slice(&0x70u32.to_le_bytes());
        out.extend_from_slice(&0x12345678u32.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // link_size
        out.extend_from_slice(&0u32.to_le_bytes()); // link_off
        out.extend_from_slice(&0u32.to_le_bytes()); // map_off (unused here)
        out.extend_from_slice(&(strings.len() as u32).to_le_bytes());
        out.extend_from_slice(&string_ids_off.to_le_bytes());
        out.extend_from_slice(&(types.len() as u32).to_le_bytes());
        out.extend_from_slice(&type_ids_off.to_le_bytes());
        out.extend_from_slice(&(protos.len() as u32).to_le_bytes());
        out.extend_from_slice(&proto_ids_off.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // field_ids_size
        out.extend_from_slice(&0u32.to_le_bytes()); // field_ids_off
        out.extend_from_slice(&(method_keys.len() as u32).to_le_bytes());
        out.extend_from_slice(&method_ids_off.to_le_bytes());
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        out.extend_from_slice(&class_defs_off.to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&data_off.to_le_bytes());
        assert_eq!(out.len(), 0x70);

        for off in &string_data_offs {
            out.extend_from_slice(&off.to_le_bytes());
        }
        for t in &types {
            out.extend_from_slice(&string_idx(t).to_le_bytes());
        }
        for (shorty, ret, params) in &protos {
            out.extend_from_slice(&string_idx(shorty).to_le_bytes());
            out.extend_from_slice(&type_idx(ret).to_le_bytes());
            let list_off = type_list_offs[protos
                .iter()
                .position(|p| p.0 == *shorty && p.1 == *ret && p.2 == *params)
                .unwrap()];
            out.extend_from_slice(&list_off.to_le_bytes());
        }
        for key in &method_keys {
            out.extend_from_slice(&(type_idx(&key.class) as u16).to_le_bytes());
            out.extend_from_slice(&(proto_idx(key) as u16).to_le_bytes());
            out.extend_from_slice(&string_idx(&key.name).to_le_bytes());
        }
        for (i, class) in self.classes.iter().enumerate() {
            out.extend_from_slice(&type_idx(class).to_le_bytes());
            out.extend_from_slice(&0x1u32.to_le_bytes()); // ACC_PUBLIC
            out.extend_from_slice(&type_idx(&object).to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes()); // interfaces_off
            out.extend_from_slice(&0xffff_ffffu32.to_le_bytes()); // source_file_idx
            out.extend_from_slice(&0u32.to_le_bytes()); // annotations_off
            out.extend_from_slice(&class_data_offs[i].to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes()); // static_values_off
        }
        out.extend_from_slice(&data);
        debug_assert_eq!(out.len() as u32, file_size);

        let checksum = adler32(&out[12..]);
        out[8..12].copy_from_slice(&checksum.to_le_bytes());
        (out, ledgers)
    }
}

fn write_uleb(out: &mut Vec<u8>, mut value: u32) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(byte);
            break;
        }
        out.push(byte | 0x80);
    }
}

fn adler32(bytes: &[u8]) -> u32 {
    let mut a: u32 = 1;
    let mut b: u32 = 0;
    for chunk in bytes.chunks(5550) {
        for &byte in chunk {
            a += byte as u32;
            b += a;
        }
        a %= 65521;
        b %= 65521;
    }
    (b << 16) | a
}
