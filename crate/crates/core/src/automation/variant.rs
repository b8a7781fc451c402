//! VARIANT values and their four-word memory form.
//!
//! ```text
//! word 0  vt (low 16 bits)
//! word 1  reserved, 0
//! word 2  payload
//! word 3  0
//! ```
//!
//! A BSTR points one word past a length prefix holding the byte count of
//! the UTF-16 text; the text is NUL-terminated.

use std::fmt;

use super::AutoError;
use crate::binding::{BindingDesc, SemType};
use crate::marshal::{pack_string16, read_string16, Value};
use crate::wordmem::{Addr, Machine, Word};

pub const VT_EMPTY: u16 = 0;
pub const VT_I4: u16 = 3;
pub const VT_BSTR: u16 = 8;
pub const VT_DISPATCH: u16 = 9;
pub const VT_BOOL: u16 = 11;
pub const VT_UNKNOWN: u16 = 13;
pub const VT_UI4: u16 = 19;

pub const VARIANT_WORDS: usize = 4;
const VARIANT_TRUE: Word = 0xFFFF;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    Empty,
    I4(i32),
    UI4(u32),
    Bool(bool),
    Bstr(String),
    Dispatch(Addr),
    Unknown(Addr),
}

impl Variant {
    pub fn vt(&self) -> u16 {
        match self {
            Variant::Empty => VT_EMPTY,
            Variant::I4(_) => VT_I4,
            Variant::UI4(_) => VT_UI4,
            Variant::Bool(_) => VT_BOOL,
            Variant::Bstr(_) => VT_BSTR,
            Variant::Dispatch(_) => VT_DISPATCH,
            Variant::Unknown(_) => VT_UNKNOWN,
        }
    }

    /// Writes the variant at `at`, allocating a BSTR if needed.
    pub fn store(&self, m: &mut Machine, at: Addr) -> Result<(), AutoError> {
        let payload = match self {
            Variant::Empty => 0,
            Variant::I4(i) => *i as Word,
            Variant::UI4(w) => *w,
            Variant::Bool(b) => {
                if *b {
                    VARIANT_TRUE
                } else {
                    0
                }
            }
            Variant::Bstr(s) => alloc_bstr(m, s)?.word(),
            Variant::Dispatch(a) | Variant::Unknown(a) => a.word(),
        };
        m.store(at, &[self.vt() as Word, 0, payload, 0])?;
        Ok(())
    }

    pub fn load(m: &mut Machine, at: Addr) -> Result<Variant, AutoError> {
        let w = m.read(at, VARIANT_WORDS)?;
        let p = w[2];
        Ok(match w[0] as u16 {
            VT_EMPTY => Variant::Empty,
            VT_I4 => Variant::I4(p as i32),
            VT_UI4 => Variant::UI4(p),
            VT_BOOL => Variant::Bool(p & 0xFFFF != 0),
            VT_BSTR => Variant::Bstr(read_bstr(m, Addr::new(p))?),
            VT_DISPATCH => Variant::Dispatch(Addr::new(p)),
            VT_UNKNOWN => Variant::Unknown(Addr::new(p)),
            vt => return Err(AutoError::BadVariant(vt)),
        })
    }

    /// Frees the BSTR a stored variant at `at` owns, if any.
    pub fn clear(m: &mut Machine, at: Addr) -> Result<(), AutoError> {
        let w = m.read(at, VARIANT_WORDS)?;
        if w[0] as u16 == VT_BSTR && w[2] != 0 {
            free_bstr(m, Addr::new(w[2]))?;
        }
        m.store(at, &[0; VARIANT_WORDS])?;
        Ok(())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Empty => f.write_str("VT_EMPTY"),
            Variant::I4(i) => write!(f, "VT_I4({i})"),
            Variant::UI4(w) => write!(f, "VT_UI4(0x{w:08X})"),
            Variant::Bool(b) => write!(f, "VT_BOOL({b})"),
            Variant::Bstr(s) => write!(f, "VT_BSTR({s:?})"),
            Variant::Dispatch(a) => write!(f, "VT_DISPATCH({a})"),
            Variant::Unknown(a) => write!(f, "VT_UNKNOWN({a})"),
        }
    }
}

pub fn alloc_bstr(m: &mut Machine, s: &str) -> Result<Addr, AutoError> {
    let units = s.encode_utf16().count() as Word;
    let mut ws = vec![2 * units];
    ws.extend(pack_string16(s)?);
    let block = m.alloc_words(&ws)?;
    Ok(Machine::offset(block, 1))
}

pub fn read_bstr(m: &mut Machine, b: Addr) -> Result<String, AutoError> {
    if b.is_null() {
        return Ok(String::new());
    }
    Ok(read_string16(m, b)?)
}

pub fn free_bstr(m: &mut Machine, b: Addr) -> Result<(), AutoError> {
    m.free(Machine::offset(b, -1))?;
    Ok(())
}

fn mismatch() -> AutoError {
    AutoError::TypeMismatch { index: None }
}

/// Converts a variant to a value of type `t`. Tags must match exactly,
/// except that VT_I4 and VT_UI4 reinterpret each other's bits.
pub fn coerce(desc: &BindingDesc, v: &Variant, t: &SemType) -> Result<Value, AutoError> {
    let bits = match v {
        Variant::I4(i) => Some(*i as u32),
        Variant::UI4(w) => Some(*w),
        _ => None,
    };
    Ok(match (t, v) {
        (SemType::Int32, _) if bits.is_some() => Value::Int(bits.unwrap_or(0) as i32),
        (SemType::Word32, _) if bits.is_some() => Value::Word(bits.unwrap_or(0)),
        (SemType::Handle, _) if bits.is_some() => Value::Handle(bits.unwrap_or(0)),
        (SemType::Enum { name }, _) if bits.is_some() => {
            let e = desc.enum_map(name).ok_or_else(mismatch)?;
            Value::Enum(e.from_int(bits.unwrap_or(0)).ok_or_else(mismatch)?.to_string())
        }
        (SemType::Bool, Variant::Bool(b)) => Value::Bool(*b),
        (SemType::String8 | SemType::String16, Variant::Bstr(s)) => Value::Str(s.clone()),
        (SemType::OpaqueAddr, Variant::Dispatch(a) | Variant::Unknown(a)) => Value::Addr(*a),
        _ => return Err(mismatch()),
    })
}

/// The variant a value of type `t` is returned as.
pub fn to_variant(desc: &BindingDesc, v: &Value, t: &SemType) -> Result<Variant, AutoError> {
    Ok(match (t, v) {
        (SemType::Unit, _) => Variant::Empty,
        (SemType::Int32, Value::Int(i)) => Variant::I4(*i),
        (SemType::Word32, Value::Word(w)) | (SemType::Handle, Value::Handle(w)) => Variant::UI4(*w),
        (SemType::Bool, Value::Bool(b)) => Variant::Bool(*b),
        (SemType::String8 | SemType::String16, Value::Str(s)) => Variant::Bstr(s.clone()),
        (SemType::OpaqueAddr, Value::Addr(a)) => Variant::Unknown(*a),
        (SemType::Enum { name }, Value::Enum(variant)) => {
            let e = desc.enum_map(name).ok_or_else(mismatch)?;
            Variant::UI4(e.to_int(variant).ok_or_else(mismatch)?)
        }
        _ => return Err(AutoError::Unsupported(format!("{t} result as a VARIANT"))),
    })
}
