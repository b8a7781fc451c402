//! The Counter component: one dual interface over a running total. Every
//! call appends a line to a shared log, so the vtable and dispatch paths
//! can be compared by effect as well as by result.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::rc::Rc;

use super::make_dual;
use crate::binding::{build_binding, BindingDesc, Level, Manifest, Mode};
use crate::com::{clsid_of, method_impl, ClassFactory, ComError, MethodImpl};
use crate::idl::compile_unit;
use crate::marshal::Value;
use crate::wordmem::Fault;

pub const COUNTER_IDL: &str = include_str!("../../idl/counter.idl");
pub const COUNTER_MANIFEST: &str = include_str!("../../idl/counter.manifest");

pub type Log = Rc<RefCell<Vec<String>>>;

pub fn binding() -> Rc<BindingDesc> {
    let unit = compile_unit(COUNTER_IDL, "counter.idl").expect("counter.idl compiles");
    let manifest = Manifest::parse(COUNTER_MANIFEST).expect("counter.manifest parses");
    Rc::new(build_binding(&unit, Mode::Com, Level::Auto, Some(&manifest)).expect("counter binding"))
}

fn arg(v: &[Value], k: usize) -> Result<&Value, Fault> {
    v.get(k).ok_or_else(|| Fault::Raised(format!("missing argument {k}")))
}

fn int(v: &[Value], k: usize) -> Result<i32, Fault> {
    arg(v, k)?
        .as_int()
        .ok_or_else(|| Fault::Raised(format!("argument {k} is not an int")))
}

fn word(v: &[Value], k: usize) -> Result<u32, Fault> {
    arg(v, k)?
        .as_word()
        .ok_or_else(|| Fault::Raised(format!("argument {k} is not a word")))
}

/// Method implementations sharing one total.
pub fn impls(log: Log) -> BTreeMap<String, MethodImpl> {
    let total = Rc::new(Cell::new(0i32));
    let mut out: BTreeMap<String, MethodImpl> = BTreeMap::new();
    {
        let (log, total) = (log.clone(), total.clone());
        out.insert(
            "Add".into(),
            method_impl(move |_, _, a| {
                let d = int(&a, 0)?;
                total.set(total.get().wrapping_add(d));
                log.borrow_mut().push(format!("Add {d}"));
                Ok(vec![Value::Int(0)])
            }),
        );
    }
    {
        let (log, total) = (log.clone(), total.clone());
        out.insert(
            "Total".into(),
            method_impl(move |_, _, _| {
                log.borrow_mut().push("Total".into());
                Ok(vec![Value::Int(total.get())])
            }),
        );
    }
    {
        let log = log.clone();
        out.insert(
            "Parity".into(),
            method_impl(move |_, _, a| {
                let flip = arg(&a, 0)?.as_bool().unwrap_or(false);
                let mask = word(&a, 1)?;
                log.borrow_mut().push(format!("Parity {flip} {mask:#x}"));
                Ok(vec![Value::Bool(flip ^ (mask.count_ones() % 2 == 1))])
            }),
        );
    }
    {
        let log = log.clone();
        out.insert(
            "Measure".into(),
            method_impl(move |_, _, a| {
                let text = arg(&a, 0)?.as_str().unwrap_or_default().to_string();
                log.borrow_mut().push(format!("Measure {text:?}"));
                Ok(vec![Value::Int(text.len() as i32), Value::Int(0)])
            }),
        );
    }
    out.insert(
        "Scale".into(),
        method_impl(move |_, _, a| {
            let (v, f) = (int(&a, 0)?, word(&a, 1)?);
            log.borrow_mut().push(format!("Scale {v} {f}"));
            Ok(vec![Value::Int(v.wrapping_mul(f as i32))])
        }),
    );
    out
}

pub fn factory(desc: Rc<BindingDesc>, log: Log) -> ClassFactory {
    let clsid = clsid_of(&desc, "Counter").expect("Counter has a CLSID");
    ClassFactory::new("Counter", clsid, move |m, com| {
        let id = com.new_object(m, Some(clsid))?;
        make_dual(m, com, id, &desc, "ICounter", &impls(log.clone())).map_err(|e| match e {
            super::AutoError::Com(e) => e,
            e => ComError::Fault(Fault::Raised(e.to_string())),
        })?;
        Ok(id)
    })
}
