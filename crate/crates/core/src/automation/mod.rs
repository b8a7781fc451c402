//! IDispatch-style invocation and dual interfaces.
//!
//! A dual vtable is `[IUnknown × 3, GetTypeInfoCount, GetTypeInfo,
//! GetIDsOfNames, Invoke, methods...]`. Invoke finds the target method's
//! vtable slot through `this` and calls it with the ordinary marshaller,
//! so both paths reach the same implementation.

pub mod counter;
mod variant;

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

pub use variant::{
    alloc_bstr, coerce, free_bstr, read_bstr, to_variant, Variant, VARIANT_WORDS, VT_BOOL, VT_BSTR, VT_DISPATCH,
    VT_EMPTY, VT_I4, VT_UI4, VT_UNKNOWN,
};

use crate::binding::{BindingDesc, InterfaceDesc, LiftedSig, SemType, TypeRef};
use crate::com::{
    call_slot, failed, skeletons, Com, ComError, Hresult, InterfaceRef, MethodImpl, ObjectId, E_FAIL, E_NOTIMPL,
    E_POINTER, IID_IDISPATCH, IUNKNOWN_SLOTS, S_OK,
};
use crate::marshal::{call_with_this, read_string16, MarshalError, Value};
use crate::wordmem::{word_fn, Addr, Convention, Fault, Machine, Word, WordFn};

pub type DispId = i32;

pub const DISPID_UNKNOWN: DispId = -1;
pub const DISP_E_MEMBERNOTFOUND: Hresult = 0x8002_0003;
pub const DISP_E_PARAMNOTFOUND: Hresult = 0x8002_0004;
pub const DISP_E_TYPEMISMATCH: Hresult = 0x8002_0005;
pub const DISP_E_UNKNOWNNAME: Hresult = 0x8002_0006;
pub const DISP_E_NONAMEDARGS: Hresult = 0x8002_0007;
pub const DISP_E_BADPARAMCOUNT: Hresult = 0x8002_000E;

/// IDispatch adds four slots after the IUnknown triple.
pub const IDISPATCH_SLOTS: usize = 4;
const GET_TYPE_INFO_COUNT: usize = IUNKNOWN_SLOTS;
const GET_IDS_OF_NAMES: usize = IUNKNOWN_SLOTS + 2;
const INVOKE: usize = IUNKNOWN_SLOTS + 3;
const DISPATCH_METHOD: Word = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutoError {
    #[error("unknown name `{0}` (DISP_E_UNKNOWNNAME)")]
    UnknownName(String),
    #[error("no member with DISPID {0} (DISP_E_MEMBERNOTFOUND)")]
    MemberNotFound(DispId),
    #[error("wrong argument count {got} (DISP_E_BADPARAMCOUNT)")]
    BadParamCount { got: usize },
    #[error("type mismatch{} (DISP_E_TYPEMISMATCH)", index.map(|i| format!(" at argument {i}")).unwrap_or_default())]
    TypeMismatch { index: Option<usize> },
    #[error("named arguments are not supported")]
    NamedArgs,
    #[error("unknown VARIANT tag {0}")]
    BadVariant(u16),
    #[error("`{0}` does not derive from IDispatch")]
    NotDual(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("call failed with HRESULT 0x{0:08X}")]
    Failed(Hresult),
    #[error(transparent)]
    Com(#[from] ComError),
    #[error(transparent)]
    Marshal(#[from] MarshalError),
    #[error(transparent)]
    Fault(#[from] Fault),
}

impl AutoError {
    pub fn hresult(&self) -> Hresult {
        match self {
            AutoError::UnknownName(_) => DISP_E_UNKNOWNNAME,
            AutoError::MemberNotFound(_) => DISP_E_MEMBERNOTFOUND,
            AutoError::BadParamCount { .. } => DISP_E_BADPARAMCOUNT,
            AutoError::TypeMismatch { .. } => DISP_E_TYPEMISMATCH,
            AutoError::NamedArgs => DISP_E_NONAMEDARGS,
            AutoError::Failed(hr) => *hr,
            AutoError::Com(e) => e.hresult(),
            _ => E_FAIL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispEntry {
    pub id: DispId,
    pub sig: LiftedSig,
    pub slot: usize,
}

impl DispEntry {
    /// The value Invoke hands back: every result except an HRESULT return.
    fn result_types(&self) -> Vec<&TypeRef> {
        let sig = &self.sig;
        let mut out: Vec<&TypeRef> = sig.out_params().map(|p| &p.ty).collect();
        if sig.ret.sem != SemType::Unit && !returns_hresult(sig) {
            out.push(&sig.ret);
        }
        out
    }
}

fn returns_hresult(sig: &LiftedSig) -> bool {
    sig.ret.display == "HRESULT"
}

/// Name → DISPID table of one dual interface. DISPIDs run densely from 1
/// in declaration order; lookup ignores ASCII case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispTable {
    entries: Vec<DispEntry>,
}

impl DispTable {
    pub fn new(i: &InterfaceDesc) -> Result<Self, AutoError> {
        if i.parent.as_deref() != Some("IDispatch") {
            return Err(AutoError::NotDual(i.name.clone()));
        }
        let mut ms: Vec<&LiftedSig> = i
            .methods
            .iter()
            .filter(|s| s.slot.is_some_and(|k| k as usize >= IUNKNOWN_SLOTS + IDISPATCH_SLOTS))
            .collect();
        ms.sort_by_key(|s| s.slot);
        let entries: Vec<DispEntry> = ms
            .into_iter()
            .enumerate()
            .map(|(k, s)| DispEntry {
                id: k as DispId + 1,
                sig: s.clone(),
                slot: s.slot.unwrap_or(0) as usize,
            })
            .collect();
        for e in &entries {
            if e.result_types().len() > 1 {
                return Err(AutoError::Unsupported(format!(
                    "`{}` has more than one result",
                    e.sig.name
                )));
            }
        }
        Ok(DispTable { entries })
    }

    pub fn entries(&self) -> &[DispEntry] {
        &self.entries
    }

    pub fn id_of(&self, name: &str) -> Option<DispId> {
        self.entries
            .iter()
            .find(|e| e.sig.name.eq_ignore_ascii_case(name))
            .map(|e| e.id)
    }

    pub fn entry(&self, id: DispId) -> Option<&DispEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn arity(symbol: &str, expected: usize, args: &[Word]) -> Result<(), Fault> {
    if args.len() == expected {
        return Ok(());
    }
    Err(Fault::ArityMismatch {
        symbol: symbol.into(),
        convention: Convention::Pascal,
        expected,
        got: args.len(),
    })
}

fn raised(e: AutoError) -> Fault {
    match e {
        AutoError::Fault(f) => f,
        e => Fault::Raised(e.to_string()),
    }
}

/// The four IDispatch slot closures for `table`.
fn dispatch_slots(desc: Rc<BindingDesc>, table: Rc<DispTable>) -> [WordFn; IDISPATCH_SLOTS] {
    let count = word_fn(|m, args| {
        arity("GetTypeInfoCount", 2, args)?;
        if args[1] == 0 {
            return Ok(E_POINTER);
        }
        m.store_word(Addr::new(args[1]), 0)?;
        Ok(S_OK)
    });
    let info = word_fn(|m, args| {
        arity("GetTypeInfo", 4, args)?;
        if args[3] != 0 {
            m.store_word(Addr::new(args[3]), 0)?;
        }
        Ok(E_NOTIMPL)
    });
    let names = {
        let table = table.clone();
        word_fn(move |m, args| {
            // (this, riid, rgszNames, cNames, lcid, rgDispId); riid and lcid are ignored.
            arity("GetIDsOfNames", 6, args)?;
            let (names, n, ids) = (Addr::new(args[2]), args[3] as usize, Addr::new(args[5]));
            if n == 0 {
                return Ok(S_OK);
            }
            let mut hr = S_OK;
            let mut member = None;
            for k in 0..n {
                let p = m.read_word(Machine::offset(names, k as i32))?;
                let name = read_string16(m, Addr::new(p)).map_err(|e| Fault::Raised(e.to_string()))?;
                let id = if k == 0 {
                    member = table.id_of(&name).and_then(|id| table.entry(id));
                    member.map(|e| e.id)
                } else {
                    member.and_then(|e| {
                        e.sig
                            .in_params()
                            .position(|q| q.name.eq_ignore_ascii_case(&name))
                            .map(|i| i as DispId)
                    })
                };
                if id.is_none() {
                    hr = DISP_E_UNKNOWNNAME;
                }
                m.store_word(Machine::offset(ids, k as i32), id.unwrap_or(DISPID_UNKNOWN) as Word)?;
            }
            Ok(hr)
        })
    };
    let invoke = word_fn(move |m, args| {
        // (this, dispid, riid, lcid, wFlags, pDispParams, pVarResult, pExcepInfo, puArgErr)
        arity("Invoke", 9, args)?;
        let this = Addr::new(args[0]);
        let Some(entry) = table.entry(args[1] as DispId) else {
            return Ok(DISP_E_MEMBERNOTFOUND);
        };
        let params = m.read(Addr::new(args[5]), 4)?;
        let (rgvarg, n, named) = (Addr::new(params[0]), params[2] as usize, params[3]);
        if named != 0 {
            return Ok(DISP_E_NONAMEDARGS);
        }
        let expected = entry.sig.in_params().count();
        if n != expected {
            return Ok(DISP_E_BADPARAMCOUNT);
        }
        let mut ins = Vec::with_capacity(n);
        for (k, p) in entry.sig.in_params().enumerate() {
            // rgvarg holds the arguments last-first.
            let at = Machine::offset(rgvarg, ((n - 1 - k) * VARIANT_WORDS) as i32);
            let v = Variant::load(m, at).map_err(raised)?;
            match coerce(&desc, &v, &p.ty.sem) {
                Ok(v) => ins.push(v),
                Err(_) => {
                    if args[8] != 0 {
                        m.store_word(Addr::new(args[8]), k as Word)?;
                    }
                    return Ok(DISP_E_TYPEMISMATCH);
                }
            }
        }
        let vtable = Addr::new(m.read_word(this)?);
        let target = Addr::new(m.read_word(Machine::offset(vtable, entry.slot as i32))?);
        let mut results = call_with_this(m, &desc, &entry.sig, target, this, &ins).map_err(|e| match e {
            MarshalError::Fault(f) => f,
            e => Fault::Raised(e.to_string()),
        })?;
        if returns_hresult(&entry.sig) {
            let hr = results.pop().and_then(|v| v.as_word()).unwrap_or(E_FAIL);
            if failed(hr) {
                return Ok(hr);
            }
        }
        let result = match (results.first(), entry.result_types().first()) {
            (Some(v), Some(t)) => to_variant(&desc, v, &t.sem).map_err(raised)?,
            _ => Variant::Empty,
        };
        if args[6] != 0 {
            result.store(m, Addr::new(args[6])).map_err(raised)?;
        }
        Ok(S_OK)
    });
    [count, info, names, invoke]
}

/// Adds the dual interface `interface_name` to `owner`: its vtable holds
/// the IDispatch slots then the methods lifted from `impls`, and
/// QueryInterface for IDispatch answers with it.
pub fn make_dual(
    m: &mut Machine,
    com: &Com,
    owner: ObjectId,
    desc: &Rc<BindingDesc>,
    interface_name: &str,
    impls: &BTreeMap<String, MethodImpl>,
) -> Result<(InterfaceRef, Rc<DispTable>), AutoError> {
    let idesc = desc
        .interface(interface_name)
        .ok_or_else(|| AutoError::NotDual(interface_name.into()))?;
    let table = Rc::new(DispTable::new(idesc)?);
    let iid = crate::com::iid_of(desc, interface_name)?;
    let mut methods: Vec<WordFn> = dispatch_slots(desc.clone(), table.clone()).into();
    methods.extend(skeletons(desc, interface_name, impls)?);
    let iface = com.make_interface(m, owner, &iid, &methods)?;
    com.expose(owner, IID_IDISPATCH, iface.addr)?;
    Ok((iface, table))
}

struct Temps(Vec<Addr>);

impl Temps {
    fn alloc(&mut self, m: &mut Machine, ws: &[Word]) -> Result<Addr, AutoError> {
        let a = m.alloc_words(ws)?;
        self.0.push(a);
        Ok(a)
    }

    fn free(self, m: &mut Machine) {
        for a in self.0 {
            let _ = m.free(a);
        }
    }
}

fn check(hr: Word) -> Result<(), AutoError> {
    if failed(hr) {
        Err(AutoError::Failed(hr))
    } else {
        Ok(())
    }
}

/// GetTypeInfoCount through the raw slot.
pub fn get_type_info_count(m: &mut Machine, d: &InterfaceRef) -> Result<u32, AutoError> {
    let mut t = Temps(Vec::new());
    let r = (|| {
        let out = t.alloc(m, &[0])?;
        check(call_slot(m, d, GET_TYPE_INFO_COUNT, &[out.word()])?)?;
        Ok(m.read_word(out)?)
    })();
    t.free(m);
    r
}

/// GetIDsOfNames for a single member name, through the raw slot.
pub fn get_ids_of_names(m: &mut Machine, d: &InterfaceRef, name: &str) -> Result<DispId, AutoError> {
    let mut t = Temps(Vec::new());
    let r = (|| {
        let riid = t.alloc(m, &[0; 4])?;
        let text = t.alloc(m, &crate::marshal::pack_string16(name)?)?;
        let names = t.alloc(m, &[text.word()])?;
        let ids = t.alloc(m, &[0])?;
        let hr = call_slot(m, d, GET_IDS_OF_NAMES, &[riid.word(), names.word(), 1, 0, ids.word()])?;
        if hr == DISP_E_UNKNOWNNAME {
            return Err(AutoError::UnknownName(name.into()));
        }
        check(hr)?;
        Ok(m.read_word(ids)? as DispId)
    })();
    t.free(m);
    r
}

/// Invoke with positional arguments in declaration order, through the
/// raw slot.
pub fn invoke(m: &mut Machine, d: &InterfaceRef, id: DispId, args: &[Variant]) -> Result<Variant, AutoError> {
    let mut t = Temps(Vec::new());
    let mut stored: Vec<Addr> = Vec::new();
    let r = (|| {
        let n = args.len();
        let rgvarg = if n == 0 {
            Addr::NULL
        } else {
            t.alloc(m, &vec![0; n * VARIANT_WORDS])?
        };
        for (k, v) in args.iter().enumerate() {
            let at = Machine::offset(rgvarg, ((n - 1 - k) * VARIANT_WORDS) as i32);
            v.store(m, at)?;
            stored.push(at);
        }
        let params = t.alloc(m, &[rgvarg.word(), 0, n as Word, 0])?;
        let riid = t.alloc(m, &[0; 4])?;
        let result = t.alloc(m, &[0; VARIANT_WORDS])?;
        let arg_err = t.alloc(m, &[0])?;
        let hr = call_slot(
            m,
            d,
            INVOKE,
            &[
                id as Word,
                riid.word(),
                0,
                DISPATCH_METHOD,
                params.word(),
                result.word(),
                0,
                arg_err.word(),
            ],
        )?;
        match hr {
            DISP_E_MEMBERNOTFOUND => return Err(AutoError::MemberNotFound(id)),
            DISP_E_BADPARAMCOUNT => return Err(AutoError::BadParamCount { got: n }),
            DISP_E_TYPEMISMATCH => {
                let index = m.read_word(arg_err)? as usize;
                return Err(AutoError::TypeMismatch { index: Some(index) });
            }
            DISP_E_NONAMEDARGS => return Err(AutoError::NamedArgs),
            hr => check(hr)?,
        }
        let v = Variant::load(m, result)?;
        Variant::clear(m, result)?;
        Ok(v)
    })();
    for at in stored {
        let _ = Variant::clear(m, at);
    }
    t.free(m);
    r
}

/// Invoke by member name.
pub fn invoke_by_name(m: &mut Machine, d: &InterfaceRef, name: &str, args: &[Variant]) -> Result<Variant, AutoError> {
    let id = get_ids_of_names(m, d, name)?;
    invoke(m, d, id, args)
}

/// Converts results of a vtable call (outs then return, HRESULT already
/// dropped) to the variant Invoke would produce.
pub fn results_as_variant(desc: &BindingDesc, entry: &DispEntry, results: &[Value]) -> Result<Variant, AutoError> {
    match (results.first(), entry.result_types().first()) {
        (Some(v), Some(t)) => to_variant(desc, v, &t.sem),
        _ => Ok(Variant::Empty),
    }
}

#[cfg(test)]
mod tests;
