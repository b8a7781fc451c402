//! The Bar component: two interfaces, IX with `FooX` and IY with `FooY`,
//! each appending `executing FooX` / `executing FooY` to a shared log.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use super::{clsid_of, implement, method_impl, ClassFactory, MethodImpl};
use crate::binding::{build_binding, BindingDesc, Level, Manifest, Mode};
use crate::idl::compile_unit;

pub const BAR_IDL: &str = include_str!("../../idl/bar.idl");
pub const BAR_MANIFEST: &str = include_str!("../../idl/bar.manifest");

pub type Log = Rc<RefCell<Vec<String>>>;

/// The com-mode binding of `bar.idl`.
pub fn binding() -> Rc<BindingDesc> {
    let unit = compile_unit(BAR_IDL, "bar.idl").expect("bar.idl compiles");
    let manifest = Manifest::parse(BAR_MANIFEST).expect("bar.manifest parses");
    Rc::new(build_binding(&unit, Mode::Com, Level::Auto, Some(&manifest)).expect("bar binding"))
}

fn printer(log: &Log, text: &'static str) -> MethodImpl {
    let log = log.clone();
    method_impl(move |_, _, _| {
        log.borrow_mut().push(text.into());
        Ok(Vec::new())
    })
}

pub fn factory(desc: Rc<BindingDesc>, log: Log) -> ClassFactory {
    let clsid = clsid_of(&desc, "Bar").expect("Bar has a CLSID");
    ClassFactory::new("Bar", clsid, move |m, com| {
        let id = com.new_object(m, Some(clsid))?;
        let ix = BTreeMap::from([("FooX".to_string(), printer(&log, "executing FooX"))]);
        let iy = BTreeMap::from([("FooY".to_string(), printer(&log, "executing FooY"))]);
        implement(m, com, id, &desc, "IX", &ix)?;
        implement(m, com, id, &desc, "IY", &iy)?;
        Ok(id)
    })
}
