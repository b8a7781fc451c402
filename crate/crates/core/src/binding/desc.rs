//! The codegen-ready binding model and its JSON sidecar format.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::BindingError;
use crate::wordmem::Word;

/// Serializes words as `"0x%08X"` strings.
pub(crate) mod hex_word {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{w:08X}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        let s = String::deserialize(d)?;
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .ok_or_else(|| D::Error::custom(format!("word `{s}` must start with 0x")))?;
        u32::from_str_radix(digits, 16).map_err(|_| D::Error::custom(format!("bad word `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Dynamic,
    Com,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Records and arrays cross as opaque pointers with explicit converters.
    Abstract,
    /// Everything is converted eagerly in both directions.
    Auto,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
            Mode::Com => "com",
        })
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Abstract => "abstract",
            Level::Auto => "auto",
        })
    }
}

/// What a value means once it has crossed the word boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SemType {
    Int32,
    Word32,
    Bool,
    String8,
    String16,
    Handle,
    Enum { name: String },
    Record { name: String },
    Array { elem: Box<SemType>, len_from: String },
    Callback { name: String },
    OpaqueAddr,
    Unit,
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemType::Int32 => f.write_str("int32"),
            SemType::Word32 => f.write_str("word32"),
            SemType::Bool => f.write_str("bool"),
            SemType::String8 => f.write_str("string8"),
            SemType::String16 => f.write_str("string16"),
            SemType::Handle => f.write_str("handle"),
            SemType::Enum { name } => write!(f, "enum {name}"),
            SemType::Record { name } => write!(f, "record {name}"),
            SemType::Array { elem, len_from } => write!(f, "array of {elem} sized by {len_from}"),
            SemType::Callback { name } => write!(f, "callback {name}"),
            SemType::OpaqueAddr => f.write_str("opaque-addr"),
            SemType::Unit => f.write_str("unit"),
        }
    }
}

/// A semantic type plus the spelling used in signature text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeRef {
    pub display: String,
    pub sem: SemType,
}

impl TypeRef {
    pub fn new(display: impl Into<String>, sem: SemType) -> Self {
        TypeRef {
            display: display.into(),
            sem,
        }
    }

    pub fn unit() -> Self {
        TypeRef::new("unit", SemType::Unit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamDir {
    In,
    Out,
    InOut,
}

impl ParamDir {
    pub fn is_in(self) -> bool {
        matches!(self, ParamDir::In | ParamDir::InOut)
    }

    pub fn is_out(self) -> bool {
        matches!(self, ParamDir::Out | ParamDir::InOut)
    }
}

/// One ABI argument, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbiParam {
    pub name: String,
    pub dir: ParamDir,
    /// For out parameters, the type of the value written through the pointer.
    pub ty: TypeRef,
    /// Passed as the address of a packed copy.
    pub by_ref: bool,
}

/// An operation after out-parameter lifting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftedSig {
    pub name: String,
    pub params: Vec<AbiParam>,
    pub ret: TypeRef,
    /// Vtable slot, for com-mode methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<u32>,
}

impl LiftedSig {
    pub fn in_params(&self) -> impl Iterator<Item = &AbiParam> {
        self.params.iter().filter(|p| p.dir.is_in())
    }

    pub fn out_params(&self) -> impl Iterator<Item = &AbiParam> {
        self.params.iter().filter(|p| p.dir.is_out())
    }

    /// Out parameters in declaration order, then the return value if any.
    pub fn results(&self) -> Vec<&TypeRef> {
        let mut r: Vec<&TypeRef> = self.out_params().map(|p| &p.ty).collect();
        if self.ret.sem != SemType::Unit {
            r.push(&self.ret);
        }
        r
    }

    pub fn abi_arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceDesc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// Registry-form GUID; present for every com-mode interface.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iid: Option<String>,
    pub methods: Vec<LiftedSig>,
}

impl InterfaceDesc {
    pub fn method(&self, name: &str) -> Option<&LiftedSig> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumVariantDesc {
    pub name: String,
    #[serde(with = "hex_word")]
    pub value: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumMap {
    pub name: String,
    pub variants: Vec<EnumVariantDesc>,
}

impl EnumMap {
    pub fn to_int(&self, variant: &str) -> Option<Word> {
        self.variants.iter().find(|v| v.name == variant).map(|v| v.value)
    }

    /// The first-declared variant carrying `value`.
    pub fn from_int(&self, value: Word) -> Option<&str> {
        self.variants.iter().find(|v| v.value == value).map(|v| v.name.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldLayout {
    pub name: String,
    pub ty: TypeRef,
    /// Offset in words from the start of the record.
    pub offset: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordLayout {
    pub name: String,
    pub fields: Vec<FieldLayout>,
    /// Size in words.
    pub size: u32,
}

impl RecordLayout {
    pub fn field(&self, name: &str) -> Option<&FieldLayout> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstValue {
    String(String),
    Int(i64),
    Word(#[serde(with = "hex_word")] Word),
    /// Registry-form class identifier.
    Guid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstDesc {
    pub name: String,
    pub ty: TypeRef,
    pub value: ConstValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasDesc {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingDesc {
    pub module: String,
    pub mode: Mode,
    pub level: Level,
    pub interfaces: Vec<InterfaceDesc>,
    pub enums: Vec<EnumMap>,
    pub records: Vec<RecordLayout>,
    pub consts: Vec<ConstDesc>,
    /// Callback types, as lifted signatures of the function they describe.
    pub callbacks: Vec<LiftedSig>,
    /// Plain typedefs, kept for signature text.
    #[serde(default)]
    pub aliases: Vec<AliasDesc>,
}

impl BindingDesc {
    pub fn interface(&self, name: &str) -> Option<&InterfaceDesc> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn enum_map(&self, name: &str) -> Option<&EnumMap> {
        self.enums.iter().find(|e| e.name == name)
    }

    pub fn record(&self, name: &str) -> Option<&RecordLayout> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn callback(&self, name: &str) -> Option<&LiftedSig> {
        self.callbacks.iter().find(|c| c.name == name)
    }

    pub fn konst(&self, name: &str) -> Option<&ConstDesc> {
        self.consts.iter().find(|c| c.name == name)
    }

    /// Word size of a value of type `t`.
    pub fn layout_of(&self, t: &SemType) -> Result<u32, BindingError> {
        match t {
            SemType::Record { name } => self
                .record(name)
                .map(|r| r.size)
                .ok_or_else(|| BindingError::UnknownType(name.clone())),
            SemType::Enum { name } => self
                .enum_map(name)
                .map(|_| 1)
                .ok_or_else(|| BindingError::UnknownType(name.clone())),
            SemType::Callback { name } => self
                .callback(name)
                .map(|_| 1)
                .ok_or_else(|| BindingError::UnknownType(name.clone())),
            SemType::Unit => Ok(0),
            _ => Ok(1),
        }
    }
}

/// Serializes a description to its sidecar text: pretty JSON, two-space
/// indent, trailing newline.
pub fn emit_binding_file(desc: &BindingDesc) -> String {
    let mut s = serde_json::to_string_pretty(desc).expect("binding descriptions always serialize");
    s.push('\n');
    s
}

pub fn load_binding_file(text: &str) -> Result<BindingDesc, BindingError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let desc: BindingDesc = serde_path_to_error::deserialize(de).map_err(|e| BindingError::Schema {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    validate(&desc)?;
    Ok(desc)
}

fn schema(path: String, msg: impl Into<String>) -> BindingError {
    BindingError::Schema { path, msg: msg.into() }
}

/// Cross-reference checks the JSON schema alone cannot express.
pub fn validate(desc: &BindingDesc) -> Result<(), BindingError> {
    fn check_sem(desc: &BindingDesc, t: &SemType, path: &str) -> Result<(), BindingError> {
        match t {
            SemType::Array { elem, .. } => check_sem(desc, elem, &format!("{path}.elem")),
            SemType::Record { name } if desc.record(name).is_none() => {
                Err(schema(path.into(), format!("unknown record `{name}`")))
            }
            SemType::Enum { name } if desc.enum_map(name).is_none() => {
                Err(schema(path.into(), format!("unknown enum `{name}`")))
            }
            SemType::Callback { name } if desc.callback(name).is_none() => {
                Err(schema(path.into(), format!("unknown callback `{name}`")))
            }
            _ => Ok(()),
        }
    }
    fn check_sig(desc: &BindingDesc, s: &LiftedSig, path: &str) -> Result<(), BindingError> {
        let mut names = BTreeSet::new();
        for (k, p) in s.params.iter().enumerate() {
            let ppath = format!("{path}.params[{k}]");
            if !names.insert(p.name.as_str()) {
                return Err(schema(ppath, format!("duplicate parameter `{}`", p.name)));
            }
            check_sem(desc, &p.ty.sem, &format!("{ppath}.ty.sem"))?;
            if let SemType::Array { len_from, .. } = &p.ty.sem {
                if !s.params.iter().any(|q| &q.name == len_from && q.dir.is_in()) {
                    return Err(schema(
                        ppath,
                        format!("array length `{len_from}` is not an in parameter"),
                    ));
                }
            }
        }
        check_sem(desc, &s.ret.sem, &format!("{path}.ret.sem"))
    }

    let mut seen = BTreeSet::new();
    for (k, r) in desc.records.iter().enumerate() {
        if !seen.insert(&r.name) {
            return Err(schema(
                format!("records[{k}].name"),
                format!("duplicate record `{}`", r.name),
            ));
        }
    }
    for (k, r) in desc.records.iter().enumerate() {
        let mut at = 0;
        for (j, f) in r.fields.iter().enumerate() {
            let path = format!("records[{k}].fields[{j}]");
            check_sem(desc, &f.ty.sem, &format!("{path}.ty.sem"))?;
            if f.offset != at {
                return Err(schema(format!("{path}.offset"), format!("expected offset {at}")));
            }
            at += match &f.ty.sem {
                SemType::Record { name } if *name == r.name => {
                    return Err(schema(format!("{path}.ty.sem"), "record contains itself"))
                }
                t => desc.layout_of(t)?,
            };
        }
        if r.size != at {
            return Err(schema(format!("records[{k}].size"), format!("expected size {at}")));
        }
    }
    for (k, c) in desc.callbacks.iter().enumerate() {
        check_sig(desc, c, &format!("callbacks[{k}]"))?;
        if c.params.iter().any(|p| p.dir.is_out()) {
            return Err(schema(format!("callbacks[{k}]"), "callbacks take only in parameters"));
        }
    }
    for (k, i) in desc.interfaces.iter().enumerate() {
        for (j, m) in i.methods.iter().enumerate() {
            check_sig(desc, m, &format!("interfaces[{k}].methods[{j}]"))?;
        }
        if let Some(iid) = &i.iid {
            if iid.parse::<crate::com::Guid>().is_err() {
                return Err(schema(
                    format!("interfaces[{k}].iid"),
                    format!("malformed GUID `{iid}`"),
                ));
            }
        }
    }
    for (k, c) in desc.consts.iter().enumerate() {
        if let ConstValue::Guid(g) = &c.value {
            if g.parse::<crate::com::Guid>().is_err() {
                return Err(schema(format!("consts[{k}].value"), format!("malformed GUID `{g}`")));
            }
        }
    }
    Ok(())
}
