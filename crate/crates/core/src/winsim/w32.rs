//! Calling the simulated API through its generated binding.

use std::rc::Rc;

use super::SimError;
use crate::binding::{build_binding, BindingDesc, ConstValue, Level, LiftedSig, Mode, SemType};
use crate::idl::compile_unit;
use crate::marshal::{self, Value};
use crate::wordmem::{Addr, Machine, Word};

pub const WIN32_IDL: &str = include_str!("../../idl/win32.idl");

/// The dynamic binding of `win32.idl`.
#[derive(Clone)]
pub struct W32 {
    pub desc: Rc<BindingDesc>,
}

impl W32 {
    pub fn load() -> Result<Self, SimError> {
        let unit = compile_unit(WIN32_IDL, "win32.idl").map_err(|e| SimError::Binding(e.diagnostic("win32.idl")))?;
        let desc =
            build_binding(&unit, Mode::Dynamic, Level::Auto, None).map_err(|e| SimError::Binding(e.to_string()))?;
        Ok(W32 { desc: Rc::new(desc) })
    }

    /// `api` is `Interface.Function`, e.g. `User.ShowWindow`.
    pub fn sig(&self, api: &str) -> Result<(&str, &LiftedSig), SimError> {
        let unknown = || SimError::UnknownApi(api.into());
        let (iface, name) = api.split_once('.').ok_or_else(unknown)?;
        let i = self.desc.interface(iface).ok_or_else(unknown)?;
        let source = i.source.as_deref().ok_or_else(unknown)?;
        Ok((source, i.method(name).ok_or_else(unknown)?))
    }

    fn target(&self, m: &mut Machine, api: &str) -> Result<(Addr, &LiftedSig), SimError> {
        let (source, sig) = self.sig(api)?;
        let lib = m.open_library(source)?;
        Ok((m.get_function(&lib, &sig.name)?, sig))
    }

    /// Calls with typed values; returns outs then the return value.
    pub fn call(&self, m: &mut Machine, api: &str, ins: &[Value]) -> Result<Vec<Value>, SimError> {
        let (f, sig) = self.target(m, api)?;
        Ok(marshal::call(m, &self.desc, sig, f, ins)?)
    }

    /// Calls with plain arguments, converted per parameter type.
    pub fn call_args(&self, m: &mut Machine, api: &str, args: &[Arg]) -> Result<Option<Arg>, SimError> {
        let (_, sig) = self.sig(api)?;
        let ins = sig
            .in_params()
            .zip(args)
            .map(|(p, a)| a.to_value(&self.desc, &p.ty.sem, api))
            .collect::<Result<Vec<_>, _>>()?;
        if ins.len() != args.len() {
            return Err(SimError::BadArgs {
                api: api.into(),
                msg: format!("expected {} argument(s), got {}", sig.in_params().count(), args.len()),
            });
        }
        let out = self.call(m, api, &ins)?;
        Ok(out.first().map(|v| Arg::from_value(&self.desc, v)))
    }

    /// A string constant of the binding, e.g. `IDI_APPLICATION`.
    pub fn string_const(&self, name: &str) -> Result<String, SimError> {
        match self.desc.konst(name).map(|c| &c.value) {
            Some(ConstValue::String(s)) => Ok(s.clone()),
            _ => Err(SimError::UnknownApi(name.into())),
        }
    }

    /// `E.toInt V` for enum `E`.
    pub fn enum_value(&self, enum_name: &str, variant: &str) -> Result<Word, SimError> {
        self.desc
            .enum_map(enum_name)
            .and_then(|e| e.to_int(variant))
            .ok_or_else(|| SimError::UnknownApi(format!("{enum_name}.{variant}")))
    }
}

/// A thread-safe argument or result of a plain API call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Int(i32),
    Word(Word),
    Str(String),
}

impl From<i32> for Arg {
    fn from(i: i32) -> Self {
        Arg::Int(i)
    }
}

impl From<Word> for Arg {
    fn from(w: Word) -> Self {
        Arg::Word(w)
    }
}

impl From<&str> for Arg {
    fn from(s: &str) -> Self {
        Arg::Str(s.into())
    }
}

impl Arg {
    pub fn as_word(&self) -> Word {
        match self {
            Arg::Int(i) => *i as Word,
            Arg::Word(w) => *w,
            Arg::Str(_) => 0,
        }
    }

    pub fn as_int(&self) -> i32 {
        self.as_word() as i32
    }

    fn to_value(&self, desc: &BindingDesc, t: &SemType, api: &str) -> Result<Value, SimError> {
        let bad = || SimError::BadArgs {
            api: api.into(),
            msg: format!("{self:?} cannot be passed as {t}"),
        };
        Ok(match (t, self) {
            (SemType::String8 | SemType::String16, Arg::Str(s)) => Value::Str(s.clone()),
            (_, Arg::Str(_)) => return Err(bad()),
            (SemType::Int32, a) => Value::Int(a.as_int()),
            (SemType::Word32, a) => Value::Word(a.as_word()),
            (SemType::Handle, a) => Value::Handle(a.as_word()),
            (SemType::Bool, a) => Value::Bool(a.as_word() != 0),
            (SemType::OpaqueAddr | SemType::Callback { .. } | SemType::String8 | SemType::String16, a) => {
                Value::Addr(Addr::new(a.as_word()))
            }
            (SemType::Enum { name }, a) => {
                let e = desc.enum_map(name).ok_or_else(bad)?;
                Value::Enum(e.from_int(a.as_word()).ok_or_else(bad)?.to_string())
            }
            _ => return Err(bad()),
        })
    }

    fn from_value(desc: &BindingDesc, v: &Value) -> Arg {
        match v {
            Value::Int(i) => Arg::Int(*i),
            Value::Bool(b) => Arg::Int(*b as i32),
            Value::Str(s) => Arg::Str(s.clone()),
            Value::Enum(name) => {
                let w = desc.enums.iter().find_map(|e| e.to_int(name)).unwrap_or(0);
                Arg::Word(w)
            }
            v => Arg::Word(v.as_word().unwrap_or(0)),
        }
    }
}

/// Plain access to the API, as the bounce program sees it.
pub trait Win32 {
    /// Calls `Interface.Function`; returns its result, if any.
    fn call(&mut self, api: &str, args: &[Arg]) -> Result<Option<Arg>, SimError>;

    /// Calls and returns the result as a word (0 when void).
    fn word(&mut self, api: &str, args: &[Arg]) -> Result<Word, SimError> {
        Ok(self.call(api, args)?.map(|a| a.as_word()).unwrap_or(0))
    }

    fn int(&mut self, api: &str, args: &[Arg]) -> Result<i32, SimError> {
        Ok(self.word(api, args)? as i32)
    }
}

/// Calls straight through the binding on the current thread.
pub struct Direct<'a> {
    pub m: &'a mut Machine,
    pub w32: &'a W32,
}

impl Win32 for Direct<'_> {
    fn call(&mut self, api: &str, args: &[Arg]) -> Result<Option<Arg>, SimError> {
        self.w32.call_args(self.m, api, args)
    }
}
