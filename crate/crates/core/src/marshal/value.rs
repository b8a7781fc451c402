use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use crate::wordmem::{Addr, WordFn};

/// A high-level value on the near side of the word boundary.
#[derive(Clone)]
pub enum Value {
    Int(i32),
    Word(u32),
    Bool(bool),
    Str(String),
    Handle(u32),
    /// Variant name of an enum.
    Enum(String),
    Record(BTreeMap<String, Value>),
    Array(Vec<Value>),
    Callback(WordFn),
    /// A raw address: opaque pointers, null callbacks and strings, and
    /// records or arrays at the abstract level.
    Addr(Addr),
    Unit,
}

impl Value {
    pub fn record<K: Into<String>>(fields: impl IntoIterator<Item = (K, Value)>) -> Value {
        Value::Record(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Word(_) => "word",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Handle(_) => "handle",
            Value::Enum(_) => "enum",
            Value::Record(_) => "record",
            Value::Array(_) => "array",
            Value::Callback(_) => "callback",
            Value::Addr(_) => "address",
            Value::Unit => "unit",
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<u32> {
        match self {
            Value::Word(w) | Value::Handle(w) => Some(*w),
            Value::Int(n) => Some(*n as u32),
            Value::Addr(a) => Some(a.word()),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(m) => m.get(name),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (Word(a), Word(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (Str(a), Str(b)) => a == b,
            (Handle(a), Handle(b)) => a == b,
            (Enum(a), Enum(b)) => a == b,
            (Record(a), Record(b)) => a == b,
            (Array(a), Array(b)) => a == b,
            (Callback(a), Callback(b)) => Rc::ptr_eq(a, b),
            (Addr(a), Addr(b)) => a == b,
            (Unit, Unit) => true,
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "Int({n})"),
            Value::Word(w) => write!(f, "Word(0x{w:08X})"),
            Value::Bool(b) => write!(f, "Bool({b})"),
            Value::Str(s) => write!(f, "Str({s:?})"),
            Value::Handle(h) => write!(f, "Handle({h})"),
            Value::Enum(v) => write!(f, "Enum({v})"),
            Value::Record(m) => f.debug_map().entries(m.iter()).finish(),
            Value::Array(vs) => f.debug_list().entries(vs.iter()).finish(),
            Value::Callback(c) => write!(f, "Callback({:p})", Rc::as_ptr(c) as *const ()),
            Value::Addr(a) => write!(f, "Addr({a})"),
            Value::Unit => f.write_str("Unit"),
        }
    }
}
