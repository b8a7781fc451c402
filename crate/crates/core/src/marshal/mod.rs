//! Conversion between typed values and words, and the call driver that
//! packs arguments, allocates out blocks, invokes, unpacks and cleans up.

mod value;

use std::rc::Rc;

use thiserror::Error;

pub use value::Value;

use crate::binding::{AbiParam, BindingDesc, BindingError, Level, LiftedSig, ParamDir, SemType};
use crate::wordmem::{word_fn, Addr, Fault, Machine, Word, WordFn};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarshalError {
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("string contains NUL")]
    BadString,
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("word 0x{word:08X} is not a value of {ty}")]
    Decode { ty: String, word: Word },
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("record `{record}`: {reason} `{field}`")]
    Field {
        record: String,
        field: String,
        reason: &'static str,
    },
    #[error("array `{param}` has {got} element(s) but its length parameter says {expected}")]
    Length { param: String, expected: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Fault(#[from] Fault),
}

impl From<BindingError> for MarshalError {
    fn from(e: BindingError) -> Self {
        match e {
            BindingError::UnknownType(n) => MarshalError::UnknownType(n),
            other => MarshalError::Unsupported(other.to_string()),
        }
    }
}

fn mismatch(t: &SemType, v: &Value) -> MarshalError {
    MarshalError::TypeMismatch {
        expected: t.to_string(),
        found: v.kind().to_string(),
    }
}

/// Word size of a value of type `t` when held inline.
pub fn layout_of(t: &SemType, desc: &BindingDesc) -> Result<u32, MarshalError> {
    Ok(desc.layout_of(t)?)
}

/// Words produced by packing a value, plus the heap blocks created to hold
/// its out-of-line parts (strings, arrays, by-reference copies).
#[derive(Debug, Default)]
pub struct Packed {
    pub words: Vec<Word>,
    pub blocks: Vec<Addr>,
}

impl Packed {
    pub fn free(self, m: &mut Machine) -> Result<(), Fault> {
        free_all(m, self.blocks)
    }
}

fn free_all(m: &mut Machine, blocks: Vec<Addr>) -> Result<(), Fault> {
    let mut first = Ok(());
    for b in blocks.into_iter().rev() {
        if let Err(e) = m.free(b) {
            first = first.and(Err(e));
        }
    }
    first
}

/// NUL-terminated bytes packed little-endian, four per word.
pub fn pack_string8(s: &str) -> Result<Vec<Word>, MarshalError> {
    if s.as_bytes().contains(&0) {
        return Err(MarshalError::BadString);
    }
    let mut bytes = s.as_bytes().to_vec();
    bytes.push(0);
    Ok(bytes
        .chunks(4)
        .map(|c| {
            let mut w = [0u8; 4];
            w[..c.len()].copy_from_slice(c);
            u32::from_le_bytes(w)
        })
        .collect())
}

/// NUL-terminated UTF-16 code units, two per word, low half first.
pub fn pack_string16(s: &str) -> Result<Vec<Word>, MarshalError> {
    let mut units: Vec<u16> = s.encode_utf16().collect();
    if units.contains(&0) {
        return Err(MarshalError::BadString);
    }
    units.push(0);
    Ok(units
        .chunks(2)
        .map(|c| c[0] as u32 | (c.get(1).copied().unwrap_or(0) as u32) << 16)
        .collect())
}

/// Reads a string8 starting at `a`, copying it out of the heap.
pub fn read_string8(m: &mut Machine, a: Addr) -> Result<String, MarshalError> {
    let mut bytes = Vec::new();
    for i in 0.. {
        let w = m.read_word(Machine::offset(a, i))?;
        for b in w.to_le_bytes() {
            if b == 0 {
                return String::from_utf8(bytes).map_err(|_| MarshalError::BadString);
            }
            bytes.push(b);
        }
    }
    unreachable!()
}

pub fn read_string16(m: &mut Machine, a: Addr) -> Result<String, MarshalError> {
    let mut units = Vec::new();
    for i in 0.. {
        let w = m.read_word(Machine::offset(a, i))?;
        for u in [w as u16, (w >> 16) as u16] {
            if u == 0 {
                return String::from_utf16(&units).map_err(|_| MarshalError::BadString);
            }
            units.push(u);
        }
    }
    unreachable!()
}

struct Packer<'a> {
    desc: &'a BindingDesc,
    blocks: Vec<Addr>,
}

impl Packer<'_> {
    fn block(&mut self, m: &mut Machine, ws: &[Word]) -> Result<Addr, MarshalError> {
        let a = m.alloc_words(ws)?;
        self.blocks.push(a);
        Ok(a)
    }

    fn pack(&mut self, m: &mut Machine, v: &Value, t: &SemType, out: &mut Vec<Word>) -> Result<(), MarshalError> {
        let w = match (t, v) {
            (SemType::Int32, Value::Int(n)) => *n as u32,
            (SemType::Word32, Value::Word(w)) => *w,
            (SemType::Handle, Value::Handle(h)) => *h,
            (SemType::Bool, Value::Bool(b)) => *b as u32,
            (SemType::OpaqueAddr, Value::Addr(a)) => a.word(),
            (SemType::Unit, Value::Unit) => return Ok(()),
            (SemType::String8, Value::Str(s)) => self.block(m, &pack_string8(s)?)?.word(),
            (SemType::String16, Value::Str(s)) => self.block(m, &pack_string16(s)?)?.word(),
            (SemType::String8 | SemType::String16, Value::Addr(a)) => a.word(),
            (SemType::Enum { name }, Value::Enum(variant)) => {
                let e = self
                    .desc
                    .enum_map(name)
                    .ok_or_else(|| MarshalError::UnknownType(name.clone()))?;
                e.to_int(variant).ok_or_else(|| MarshalError::TypeMismatch {
                    expected: format!("variant of {name}"),
                    found: variant.clone(),
                })?
            }
            (SemType::Callback { .. }, Value::Callback(f)) => m.fun_to_addr(f).word(),
            (SemType::Callback { .. }, Value::Addr(a)) => a.word(),
            (SemType::Record { name }, Value::Record(fields)) => {
                let layout = self
                    .desc
                    .record(name)
                    .ok_or_else(|| MarshalError::UnknownType(name.clone()))?;
                if let Some(extra) = fields.keys().find(|k| layout.field(k).is_none()) {
                    return Err(MarshalError::Field {
                        record: name.clone(),
                        field: extra.clone(),
                        reason: "unknown field",
                    });
                }
                for f in &layout.fields {
                    let fv = fields.get(&f.name).ok_or_else(|| MarshalError::Field {
                        record: name.clone(),
                        field: f.name.clone(),
                        reason: "missing field",
                    })?;
                    self.pack(m, fv, &f.ty.sem, out)?;
                }
                return Ok(());
            }
            (SemType::Array { elem, .. }, Value::Array(items)) => {
                if items.is_empty() {
                    0
                } else {
                    let mut ws = Vec::new();
                    for item in items {
                        self.pack(m, item, elem, &mut ws)?;
                    }
                    self.block(m, &ws)?.word()
                }
            }
            (SemType::Array { .. }, Value::Addr(a)) => a.word(),
            (t, v) => return Err(mismatch(t, v)),
        };
        out.push(w);
        Ok(())
    }
}

/// Packs `v` as a value of type `t`. Scalars are inline, records inline
/// field by field, strings and arrays go to fresh heap blocks whose
/// addresses are emitted, callbacks through `fun_to_addr`.
pub fn marshal_value(m: &mut Machine, desc: &BindingDesc, v: &Value, t: &SemType) -> Result<Packed, MarshalError> {
    let mut p = Packer {
        desc,
        blocks: Vec::new(),
    };
    let mut words = Vec::new();
    match p.pack(m, v, t, &mut words) {
        Ok(()) => Ok(Packed {
            words,
            blocks: p.blocks,
        }),
        Err(e) => {
            let _ = free_all(m, p.blocks);
            Err(e)
        }
    }
}

/// Decodes an inline word sequence of type `t`. The slice must hold
/// exactly `layout_of(t)` words.
pub fn unmarshal_value(m: &mut Machine, desc: &BindingDesc, ws: &[Word], t: &SemType) -> Result<Value, MarshalError> {
    let size = layout_of(t, desc)? as usize;
    if ws.len() != size {
        return Err(MarshalError::TypeMismatch {
            expected: format!("{size} word(s) of {t}"),
            found: format!("{} word(s)", ws.len()),
        });
    }
    decode(m, desc, ws, t, None)
}

/// Reads and decodes a value of type `t` stored at `a`.
pub fn read_value(m: &mut Machine, desc: &BindingDesc, a: Addr, t: &SemType) -> Result<Value, MarshalError> {
    let size = layout_of(t, desc)? as usize;
    let ws = m.read(a, size)?;
    decode(m, desc, &ws, t, None)
}

fn decode(
    m: &mut Machine,
    desc: &BindingDesc,
    ws: &[Word],
    t: &SemType,
    len: Option<usize>,
) -> Result<Value, MarshalError> {
    let w = ws.first().copied().unwrap_or(0);
    Ok(match t {
        SemType::Int32 => Value::Int(w as i32),
        SemType::Word32 => Value::Word(w),
        SemType::Handle => Value::Handle(w),
        SemType::Bool => Value::Bool(w != 0),
        SemType::OpaqueAddr => Value::Addr(Addr::new(w)),
        SemType::Unit => Value::Unit,
        SemType::String8 | SemType::String16 if w == 0 => Value::Addr(Addr::NULL),
        SemType::String8 => Value::Str(read_string8(m, Addr::new(w))?),
        SemType::String16 => Value::Str(read_string16(m, Addr::new(w))?),
        SemType::Enum { name } => {
            let e = desc
                .enum_map(name)
                .ok_or_else(|| MarshalError::UnknownType(name.clone()))?;
            let v = e.from_int(w).ok_or_else(|| MarshalError::Decode {
                ty: name.clone(),
                word: w,
            })?;
            Value::Enum(v.to_string())
        }
        SemType::Callback { .. } if w == 0 => Value::Addr(Addr::NULL),
        SemType::Callback { .. } => Value::Callback(m.addr_to_fun(Addr::new(w))?),
        SemType::Record { name } => {
            let layout = desc
                .record(name)
                .ok_or_else(|| MarshalError::UnknownType(name.clone()))?;
            let mut fields = std::collections::BTreeMap::new();
            for f in &layout.fields {
                let size = desc.layout_of(&f.ty.sem)? as usize;
                let at = f.offset as usize;
                let slice = ws.get(at..at + size).ok_or_else(|| MarshalError::Field {
                    record: name.clone(),
                    field: f.name.clone(),
                    reason: "truncated at",
                })?;
                fields.insert(f.name.clone(), decode(m, desc, slice, &f.ty.sem, None)?);
            }
            Value::Record(fields)
        }
        SemType::Array { elem, .. } => {
            let n = len.ok_or_else(|| MarshalError::Unsupported("array without a known length".into()))?;
            if n == 0 || w == 0 {
                return Ok(Value::Array(Vec::new()));
            }
            let size = desc.layout_of(elem)? as usize;
            let words = m.read(Addr::new(w), n * size)?;
            let items = words
                .chunks(size)
                .map(|c| decode(m, desc, c, elem, None))
                .collect::<Result<_, _>>()?;
            Value::Array(items)
        }
    })
}

/// Per-parameter action of a call, in ABI argument order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Scalar in-argument, passed as its word.
    PassWord,
    /// Record packed into a temporary block; its address is passed.
    PassAddrOfPacked {
        size: u32,
    },
    /// Inline record occupying several argument words.
    PassInline {
        size: u32,
    },
    /// Fresh block for the callee to fill; decoded after the call.
    AllocOut {
        size: u32,
    },
    /// In/out: packed into a block, passed by address, decoded after.
    PackInOut {
        size: u32,
    },
    PackString,
    PackArray,
    /// Out array whose element count comes from an in-parameter.
    AllocOutArray {
        elem_size: u32,
    },
    PackCallback,
}

#[derive(Clone, Debug)]
pub struct CallPlan {
    pub sig: LiftedSig,
    pub actions: Vec<Action>,
}

impl CallPlan {
    pub fn new(sig: &LiftedSig, desc: &BindingDesc) -> Result<Self, MarshalError> {
        let actions = sig
            .params
            .iter()
            .map(|p| plan_param(p, desc))
            .collect::<Result<_, _>>()?;
        Ok(CallPlan {
            sig: sig.clone(),
            actions,
        })
    }
}

fn plan_param(p: &AbiParam, desc: &BindingDesc) -> Result<Action, MarshalError> {
    let size = layout_of(&p.ty.sem, desc)?;
    Ok(match (p.dir, &p.ty.sem) {
        (ParamDir::Out, SemType::Array { elem, .. }) => Action::AllocOutArray {
            elem_size: layout_of(elem, desc)?,
        },
        (ParamDir::Out, _) => Action::AllocOut { size: size.max(1) },
        (ParamDir::InOut, _) => Action::PackInOut { size: size.max(1) },
        (ParamDir::In, SemType::Record { .. }) if p.by_ref => Action::PassAddrOfPacked { size },
        (ParamDir::In, SemType::Record { .. }) => Action::PassInline { size },
        (ParamDir::In, SemType::String8 | SemType::String16) => Action::PackString,
        (ParamDir::In, SemType::Array { .. }) => Action::PackArray,
        (ParamDir::In, SemType::Callback { .. }) => Action::PackCallback,
        (ParamDir::In, _) => Action::PassWord,
    })
}

/// Calls the function at `target` through `sig`.
///
/// `ins` are the in-parameters in declaration order. Returns the out
/// values in declaration order followed by the decoded return value
/// (omitted when void). Temporaries are freed on every path; a packing
/// error aborts before the callee runs.
pub fn call(
    m: &mut Machine,
    desc: &BindingDesc,
    sig: &LiftedSig,
    target: Addr,
    ins: &[Value],
) -> Result<Vec<Value>, MarshalError> {
    run(m, desc, sig, target, None, ins)
}

/// Like [`call`], with `this` prepended to the argument words.
pub fn call_with_this(
    m: &mut Machine,
    desc: &BindingDesc,
    sig: &LiftedSig,
    target: Addr,
    this: Addr,
    ins: &[Value],
) -> Result<Vec<Value>, MarshalError> {
    run(m, desc, sig, target, Some(this), ins)
}

struct OutSlot {
    param: usize,
    block: Addr,
    len: Option<usize>,
}

fn run(
    m: &mut Machine,
    desc: &BindingDesc,
    sig: &LiftedSig,
    target: Addr,
    this: Option<Addr>,
    ins: &[Value],
) -> Result<Vec<Value>, MarshalError> {
    let expected = sig.in_params().count();
    if ins.len() != expected {
        return Err(MarshalError::Arity {
            name: sig.name.clone(),
            expected,
            got: ins.len(),
        });
    }
    let plan = CallPlan::new(sig, desc)?;
    let mut packer = Packer {
        desc,
        blocks: Vec::new(),
    };
    let mut outs = Vec::new();
    let packed = pack_args(m, desc, &plan, ins, &mut packer, &mut outs);
    let mut words = match packed {
        Ok(ws) => ws,
        Err(e) => {
            let _ = free_all(m, packer.blocks);
            let _ = free_all(
                m,
                outs.into_iter()
                    .filter(|o| !o.block.is_null())
                    .map(|o| o.block)
                    .collect(),
            );
            return Err(e);
        }
    };
    if let Some(this) = this {
        words.insert(0, this.word());
    }

    let keep_raw = desc.level == Level::Abstract;
    let result = m.call(target, &words).map_err(MarshalError::from).and_then(|ret| {
        let mut results = Vec::new();
        for o in &outs {
            let p = &sig.params[o.param];
            let raw = keep_raw && matches!(p.ty.sem, SemType::Record { .. } | SemType::Array { .. });
            results.push(if raw {
                Value::Addr(o.block)
            } else if o.block.is_null() {
                decode(m, desc, &[0], &p.ty.sem, Some(0))?
            } else {
                let size = match o.len {
                    Some(_) => 1,
                    None => layout_of(&p.ty.sem, desc)? as usize,
                };
                let ws = match o.len {
                    Some(_) => vec![o.block.word()],
                    None => m.read(o.block, size)?,
                };
                decode(m, desc, &ws, &p.ty.sem, o.len)?
            });
        }
        if sig.ret.sem != SemType::Unit {
            if layout_of(&sig.ret.sem, desc)? != 1 {
                return Err(MarshalError::Unsupported(format!(
                    "`{}` returns a multi-word value",
                    sig.name
                )));
            }
            results.push(decode(m, desc, &[ret], &sig.ret.sem, None)?);
        }
        Ok(results)
    });

    let _ = free_all(m, packer.blocks);
    for o in outs {
        let p = &sig.params[o.param];
        let raw = keep_raw && matches!(p.ty.sem, SemType::Record { .. } | SemType::Array { .. });
        if !o.block.is_null() && (!raw || result.is_err()) {
            let _ = m.free(o.block);
        }
    }
    result
}

fn pack_args(
    m: &mut Machine,
    desc: &BindingDesc,
    plan: &CallPlan,
    ins: &[Value],
    packer: &mut Packer<'_>,
    outs: &mut Vec<OutSlot>,
) -> Result<Vec<Word>, MarshalError> {
    let sig = &plan.sig;
    let in_value = |name: &str| -> Option<&Value> { sig.in_params().position(|q| q.name == name).map(|k| &ins[k]) };
    let length_of = |p: &AbiParam| -> Result<usize, MarshalError> {
        let SemType::Array { len_from, .. } = &p.ty.sem else {
            unreachable!()
        };
        let v = in_value(len_from).ok_or_else(|| MarshalError::UnknownType(len_from.clone()))?;
        v.as_word()
            .map(|w| w as usize)
            .ok_or_else(|| MarshalError::TypeMismatch {
                expected: "integer length".into(),
                found: v.kind().into(),
            })
    };

    let mut words = Vec::new();
    let mut next_in = 0;
    for (k, (p, action)) in sig.params.iter().zip(&plan.actions).enumerate() {
        let v = if p.dir.is_in() {
            next_in += 1;
            Some(&ins[next_in - 1])
        } else {
            None
        };
        match action {
            Action::PassWord | Action::PackString | Action::PackCallback | Action::PassInline { .. } => {
                packer.pack(m, v.expect("in parameter"), &p.ty.sem, &mut words)?;
            }
            Action::PackArray => {
                let v = v.expect("in parameter");
                if let Value::Array(items) = v {
                    let expected = length_of(p)?;
                    if items.len() != expected {
                        return Err(MarshalError::Length {
                            param: p.name.clone(),
                            expected,
                            got: items.len(),
                        });
                    }
                }
                packer.pack(m, v, &p.ty.sem, &mut words)?;
            }
            Action::PassAddrOfPacked { .. } => {
                let v = v.expect("in parameter");
                if let (Value::Addr(a), Level::Abstract) = (v, desc.level) {
                    words.push(a.word());
                } else {
                    let mut ws = Vec::new();
                    packer.pack(m, v, &p.ty.sem, &mut ws)?;
                    words.push(packer.block(m, &ws)?.word());
                }
            }
            Action::AllocOut { size } => {
                let block = m.alloc(*size as usize)?;
                outs.push(OutSlot {
                    param: k,
                    block,
                    len: None,
                });
                words.push(block.word());
            }
            Action::AllocOutArray { elem_size } => {
                let n = length_of(p)?;
                let block = if n == 0 {
                    Addr::NULL
                } else {
                    m.alloc(n * *elem_size as usize)?
                };
                outs.push(OutSlot {
                    param: k,
                    block,
                    len: Some(n),
                });
                words.push(block.word());
            }
            Action::PackInOut { size } => {
                let mut ws = Vec::new();
                packer.pack(m, v.expect("in parameter"), &p.ty.sem, &mut ws)?;
                ws.resize(*size as usize, 0);
                let block = m.alloc_words(&ws)?;
                outs.push(OutSlot {
                    param: k,
                    block,
                    len: None,
                });
                words.push(block.word());
            }
        }
    }
    Ok(words)
}

/// Wraps a typed implementation as a word function obeying `sig`: the
/// argument words are decoded per parameter, the result is packed into
/// the return word.
pub fn lift_callback<F>(desc: Rc<BindingDesc>, sig: LiftedSig, f: F) -> WordFn
where
    F: Fn(&mut Machine, Vec<Value>) -> Result<Value, Fault> + 'static,
{
    word_fn(move |m, args| {
        let fail = |e: MarshalError| Fault::Raised(format!("{}: {e}", sig.name));
        let mut at = 0;
        let mut vals = Vec::with_capacity(sig.params.len());
        for p in &sig.params {
            let n = layout_of(&p.ty.sem, &desc).map_err(fail)? as usize;
            let slice = args.get(at..at + n).ok_or_else(|| {
                fail(MarshalError::Arity {
                    name: sig.name.clone(),
                    expected: sig.params.len(),
                    got: args.len(),
                })
            })?;
            vals.push(decode(m, &desc, slice, &p.ty.sem, None).map_err(fail)?);
            at += n;
        }
        let ret = f(m, vals)?;
        if sig.ret.sem == SemType::Unit {
            return Ok(0);
        }
        let packed = marshal_value(m, &desc, &ret, &sig.ret.sem).map_err(fail)?;
        match packed.words.as_slice() {
            [w] => Ok(*w),
            _ => Err(fail(MarshalError::Unsupported("multi-word callback result".into()))),
        }
    })
}

/// Server-side skeleton for a vtable method. The first argument word is
/// `this`; the rest follow `sig`. `f` receives the decoded in-parameters
/// and returns the out values in declaration order followed by the return
/// value (omitted when void). Out values are stored through the caller's
/// out pointers.
pub fn lift_method<F>(desc: Rc<BindingDesc>, sig: LiftedSig, f: F) -> WordFn
where
    F: Fn(&mut Machine, Addr, Vec<Value>) -> Result<Vec<Value>, Fault> + 'static,
{
    word_fn(move |m, args| {
        let fail = |e: MarshalError| Fault::Raised(format!("{}: {e}", sig.name));
        let plan = CallPlan::new(&sig, &desc).map_err(fail)?;
        let arity = || {
            fail(MarshalError::Arity {
                name: sig.name.clone(),
                expected: plan.actions.len() + 1,
                got: args.len(),
            })
        };
        let (this, rest) = args.split_first().ok_or_else(arity)?;
        let mut at = 0;
        let mut raw = Vec::with_capacity(plan.actions.len());
        for a in &plan.actions {
            let n = match a {
                Action::PassInline { size } => *size as usize,
                _ => 1,
            };
            raw.push(rest.get(at..at + n).ok_or_else(arity)?);
            at += n;
        }
        if at != rest.len() {
            return Err(arity());
        }
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for ((p, a), ws) in sig.params.iter().zip(&plan.actions).zip(&raw) {
            let addr = Addr::new(ws[0]);
            if p.dir.is_out() {
                if matches!(p.ty.sem, SemType::Array { .. }) {
                    return Err(fail(MarshalError::Unsupported("out array in a method skeleton".into())));
                }
                outs.push((p, addr));
            }
            if !p.dir.is_in() {
                continue;
            }
            let v = match a {
                Action::PassAddrOfPacked { .. } | Action::PackInOut { .. } => read_value(m, &desc, addr, &p.ty.sem),
                Action::PackArray => {
                    let SemType::Array { len_from, .. } = &p.ty.sem else {
                        unreachable!()
                    };
                    let k = sig.params.iter().position(|q| &q.name == len_from);
                    let len = k.map(|k| raw[k][0] as usize);
                    decode(m, &desc, ws, &p.ty.sem, len)
                }
                _ => decode(m, &desc, ws, &p.ty.sem, None),
            };
            ins.push(v.map_err(fail)?);
        }
        let mut results = f(m, Addr::new(*this), ins)?.into_iter();
        for (p, addr) in outs {
            let v = results.next().ok_or_else(|| {
                fail(MarshalError::Arity {
                    name: sig.name.clone(),
                    expected: sig.results().len(),
                    got: 0,
                })
            })?;
            if !addr.is_null() {
                let packed = marshal_value(m, &desc, &v, &p.ty.sem).map_err(fail)?;
                m.store(addr, &packed.words)?;
            }
        }
        if sig.ret.sem == SemType::Unit {
            return Ok(0);
        }
        let ret = results.next().ok_or_else(|| {
            fail(MarshalError::Arity {
                name: sig.name.clone(),
                expected: sig.results().len(),
                got: 0,
            })
        })?;
        let packed = marshal_value(m, &desc, &ret, &sig.ret.sem).map_err(fail)?;
        match packed.words.as_slice() {
            [w] => Ok(*w),
            _ => Err(fail(MarshalError::Unsupported("multi-word result".into()))),
        }
    })
}

#[cfg(test)]
mod tests;
