//! Typed calls over com-mode binding descriptions, and the matching
//! server side that builds vtables from typed implementations.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::object::{failed, get_method, Clsid, Com, ComError, Iid, InterfaceRef, ObjectId, IUNKNOWN_SLOTS};
use super::Guid;
use crate::binding::{BindingDesc, ConstValue, InterfaceDesc, LiftedSig};
use crate::marshal::{self, lift_method, Value};
use crate::wordmem::{Addr, Fault, Machine, WordFn};

/// Typed implementation of one method: receives `this` and the decoded
/// in-parameters, returns out values then the return value.
pub type MethodImpl = Rc<dyn Fn(&mut Machine, Addr, Vec<Value>) -> Result<Vec<Value>, Fault>>;

pub fn method_impl<F>(f: F) -> MethodImpl
where
    F: Fn(&mut Machine, Addr, Vec<Value>) -> Result<Vec<Value>, Fault> + 'static,
{
    Rc::new(f)
}

fn interface<'d>(desc: &'d BindingDesc, name: &str) -> Result<&'d InterfaceDesc, ComError> {
    desc.interface(name).ok_or_else(|| ComError::UnknownMethod {
        interface: name.into(),
        method: "*".into(),
    })
}

fn bad_guid(what: &str, text: &str) -> ComError {
    ComError::WitnessMismatch {
        expected: format!("a GUID for {what}"),
        found: text.into(),
    }
}

/// The IID a binding assigns to `name`.
pub fn iid_of(desc: &BindingDesc, name: &str) -> Result<Iid, ComError> {
    let i = interface(desc, name)?;
    let text = i.iid.as_deref().ok_or_else(|| bad_guid(name, "nothing"))?;
    let guid: Guid = text.parse().map_err(|_| bad_guid(name, text))?;
    Ok(Iid::new(name, guid))
}

/// The CLSID a binding declares as `<class>CLSID`.
pub fn clsid_of(desc: &BindingDesc, class: &str) -> Result<Clsid, ComError> {
    let name = format!("{class}CLSID");
    match desc.konst(&name).map(|c| &c.value) {
        Some(ConstValue::Guid(text)) => text.parse().map(Clsid).map_err(|_| bad_guid(&name, text)),
        _ => Err(ComError::ClassNotRegistered(Clsid(Guid::from_u128(0)))),
    }
}

fn user_methods(i: &InterfaceDesc) -> Vec<&LiftedSig> {
    let mut ms: Vec<&LiftedSig> = i
        .methods
        .iter()
        .filter(|s| s.slot.is_some_and(|k| k as usize >= IUNKNOWN_SLOTS))
        .collect();
    ms.sort_by_key(|s| s.slot);
    ms
}

/// Calls `method` on `i` through its vtable slot. A failing HRESULT
/// return becomes [`ComError::Failed`]; a successful one is dropped from
/// the results.
pub fn call_method(
    m: &mut Machine,
    desc: &BindingDesc,
    i: &InterfaceRef,
    method: &str,
    ins: &[Value],
) -> Result<Vec<Value>, ComError> {
    let idesc = interface(desc, i.iid.name())?;
    if iid_of(desc, i.iid.name())? != i.iid {
        return Err(ComError::WitnessMismatch {
            expected: idesc.iid.clone().unwrap_or_default(),
            found: i.iid.to_string(),
        });
    }
    let unknown = || ComError::UnknownMethod {
        interface: idesc.name.clone(),
        method: method.into(),
    };
    let sig = user_methods(idesc)
        .into_iter()
        .find(|s| s.name == method)
        .ok_or_else(unknown)?;
    let slot = sig.slot.ok_or_else(unknown)? as usize;
    let target = slot_addr(m, i, slot)?;
    let mut out = marshal::call_with_this(m, desc, sig, target, i.addr, ins)?;
    if sig.ret.display == "HRESULT" {
        let hr = out.pop().and_then(|v| v.as_word()).unwrap_or(0);
        if failed(hr) {
            return Err(ComError::Failed(hr));
        }
    }
    Ok(out)
}

fn slot_addr(m: &mut Machine, i: &InterfaceRef, slot: usize) -> Result<Addr, ComError> {
    get_method(m, i, slot)?;
    let vtable = Addr::new(m.read_word(i.addr)?);
    Ok(Addr::new(m.read_word(Machine::offset(vtable, slot as i32))?))
}

/// Lifts `impls` (keyed by method name) into word functions in vtable
/// slot order. Every user method of the interface needs an entry.
pub fn skeletons(
    desc: &Rc<BindingDesc>,
    interface_name: &str,
    impls: &BTreeMap<String, MethodImpl>,
) -> Result<Vec<WordFn>, ComError> {
    let idesc = interface(desc, interface_name)?;
    user_methods(idesc)
        .into_iter()
        .map(|sig| {
            let f = impls.get(&sig.name).cloned().ok_or_else(|| ComError::UnknownMethod {
                interface: interface_name.into(),
                method: sig.name.clone(),
            })?;
            Ok(lift_method(desc.clone(), sig.clone(), move |m, this, ins| {
                f(m, this, ins)
            }))
        })
        .collect()
}

/// Adds `interface_name` to `owner`, with a vtable built from `impls`.
pub fn implement(
    m: &mut Machine,
    com: &Com,
    owner: ObjectId,
    desc: &Rc<BindingDesc>,
    interface_name: &str,
    impls: &BTreeMap<String, MethodImpl>,
) -> Result<InterfaceRef, ComError> {
    let iid = iid_of(desc, interface_name)?;
    let methods = skeletons(desc, interface_name, impls)?;
    com.make_interface(m, owner, &iid, &methods)
}
