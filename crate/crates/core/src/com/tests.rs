use std::collections::BTreeMap;
use std::rc::Rc;

use proptest::prelude::*;

use super::bar;
use super::*;
use crate::marshal::Value;
use crate::wordmem::{word_fn, Addr, Fault, Machine};

struct World {
    m: Machine,
    reg: Registry,
    log: bar::Log,
    desc: Rc<crate::binding::BindingDesc>,
}

fn world() -> World {
    let desc = bar::binding();
    let log: bar::Log = Rc::default();
    let mut reg = Registry::new(Com::new());
    reg.register_class_object(bar::factory(desc.clone(), log.clone()))
        .unwrap();
    World {
        m: Machine::new(),
        reg,
        log,
        desc,
    }
}

impl World {
    fn iid(&self, name: &str) -> Iid {
        iid_of(&self.desc, name).unwrap()
    }

    fn bar(&self) -> Clsid {
        clsid_of(&self.desc, "Bar").unwrap()
    }

    fn create(&mut self, iface: &str) -> InterfaceRef {
        let iid = self.iid(iface);
        let bar = self.bar();
        self.reg.create_instance(&mut self.m, bar, &iid).unwrap()
    }
}

#[test]
fn hresult_values() {
    assert_eq!(S_OK, 0);
    assert_eq!(E_NOINTERFACE, 0x8000_4002);
    assert_eq!(REGDB_E_CLASSNOTREG, 0x8004_0154);
    assert_eq!(E_NOTIMPL, 0x8000_4001);
    assert!(failed(E_NOINTERFACE) && !failed(S_OK));
}

#[test]
fn vtable_sizes() {
    let mut m = Machine::new();
    let com = Com::new();
    let id = com.new_object(&mut m, None).unwrap();
    let foo = word_fn(|_, _| Ok(0));
    let ix = com
        .make_interface(&mut m, id, &Iid::new("IX", Guid::from_u128(7)), &[foo])
        .unwrap();
    let vt = Addr::new(m.read_word(ix.addr).unwrap());
    assert_eq!(m.block_len(vt), Some(4));
    let unk = com.identity(id).unwrap();
    let vt = Addr::new(m.read_word(unk.addr).unwrap());
    assert_eq!(m.block_len(vt), Some(3));
    assert_eq!(m.block_len(ix.addr), Some(1));
    assert_eq!(com.block_count(id), Some(4));
}

#[test]
fn create_and_call_foo_x() {
    let mut w = world();
    let ix = w.create("IX");
    assert_eq!(w.reg.com().refcount(ix.owner), Some(1));
    let foo = get_method(&mut w.m, &ix, 3).unwrap();
    foo(&mut w.m, &[ix.addr.word()]).unwrap();
    assert_eq!(*w.log.borrow(), ["executing FooX"]);
    call_method(&mut w.m, &w.desc, &ix, "FooX", &[]).unwrap();
    assert_eq!(w.log.borrow().len(), 2);
    assert!(matches!(
        get_method(&mut w.m, &ix, 99),
        Err(ComError::SlotOutOfRange { index: 99, slots: 4 })
    ));
    let qi = get_method(&mut w.m, &ix, 0).unwrap();
    let vt = Addr::new(w.m.read_word(ix.addr).unwrap());
    assert_eq!(w.m.fun_to_addr(&qi).word(), w.m.read_word(vt).unwrap());
}

#[test]
fn query_interface_semantics() {
    let mut w = world();
    let com = w.reg.com().clone();
    let ix = w.create("IX");
    let iid_y = w.iid("IY");
    let iy = query_interface(&mut w.m, &ix, &iid_y).unwrap();
    assert_eq!(com.refcount(ix.owner), Some(2));
    call_method(&mut w.m, &w.desc, &iy, "FooY", &[]).unwrap();
    assert_eq!(*w.log.borrow(), ["executing FooY"]);

    let u1 = query_interface(&mut w.m, &ix, &Iid::iunknown()).unwrap();
    let u2 = query_interface(&mut w.m, &iy, &Iid::iunknown()).unwrap();
    assert_eq!(u1.addr, u2.addr);
    assert_eq!(u1.addr, com.identity(ix.owner).unwrap().addr);
    assert_ne!(u1.addr, ix.addr);

    let other = Iid::new("IZ", Guid::from_u128(0x1234));
    let e = query_interface(&mut w.m, &ix, &other).unwrap_err();
    assert_eq!(e.hresult(), 0x8000_4002);
    assert_eq!(com.refcount(ix.owner), Some(4));
    for r in [&u2, &u1, &iy] {
        release(&mut w.m, r).unwrap();
    }
    assert_eq!(com.refcount(ix.owner), Some(1));
}

#[test]
fn distinct_objects_have_distinct_identities() {
    let mut w = world();
    let a = w.create("IX");
    let b = w.create("IX");
    let ua = query_interface(&mut w.m, &a, &Iid::iunknown()).unwrap();
    let ub = query_interface(&mut w.m, &b, &Iid::iunknown()).unwrap();
    assert_ne!(ua.addr, ub.addr);
}

#[test]
fn lifetime() {
    let mut w = world();
    let com = w.reg.com().clone();
    let before = w.m.live_allocations();
    let ix = w.create("IX");
    let blocks = com.block_count(ix.owner).unwrap();
    assert_eq!(blocks, 6);
    assert_eq!(w.m.live_allocations(), before + blocks);
    assert_eq!(add_ref(&mut w.m, &ix).unwrap(), 2);
    assert_eq!(release(&mut w.m, &ix).unwrap(), 1);
    assert_eq!(release(&mut w.m, &ix).unwrap(), 0);
    assert!(!com.is_alive(ix.owner));
    assert_eq!(w.m.live_allocations(), before);
    assert_eq!(get_method(&mut w.m, &ix, 3).err(), Some(ComError::DeadObject(ix.addr)));
    assert_eq!(release(&mut w.m, &ix).err(), Some(ComError::DeadObject(ix.addr)));
    assert_eq!(com.live_objects(), 0);
}

#[test]
fn failed_create_leaks_nothing() {
    let mut w = world();
    let before = w.m.live_allocations();
    let iz = Iid::new("IZ", Guid::from_u128(99));
    let bar = w.bar();
    let e = w.reg.create_instance(&mut w.m, bar, &iz).unwrap_err();
    assert_eq!(e, ComError::NoInterface("IZ".into()));
    assert_eq!(w.m.live_allocations(), before);
    assert_eq!(w.reg.com().live_objects(), 0);

    let clsid = Clsid(Guid::from_u128(5));
    let broken = ClassFactory::new("Broken", clsid, |m, com| {
        let id = com.new_object(m, None)?;
        com.make_interface(m, id, &Iid::new("IA", Guid::from_u128(1)), &[])?;
        Err(ComError::Failed(E_FAIL))
    });
    w.reg.register_class_object(broken).unwrap();
    let e = w.reg.create_instance(&mut w.m, clsid, &Iid::iunknown()).unwrap_err();
    assert_eq!(e.hresult(), E_FAIL);
    assert_eq!(w.m.live_allocations(), before);
}

#[test]
fn registry_operations() {
    let mut w = world();
    let bar = w.bar();
    let dup = bar::factory(w.desc.clone(), w.log.clone());
    assert_eq!(w.reg.register_class_object(dup), Err(ComError::DuplicateClass(bar)));
    assert_eq!(w.reg.get_class_object(bar).unwrap().name(), "Bar");
    w.reg.revoke_class_object(bar).unwrap();
    let ix = w.iid("IX");
    let e = w.reg.create_instance(&mut w.m, bar, &ix).unwrap_err();
    assert_eq!(e.hresult(), REGDB_E_CLASSNOTREG);
    assert_eq!(
        w.reg.revoke_class_object(bar).err(),
        Some(ComError::ClassNotRegistered(bar))
    );
}

#[test]
fn registry_text_round_trip() {
    let w = world();
    let text = w.reg.dump();
    assert_eq!(text, "CLSID {6F1E2A10-3C4D-4E5F-8A9B-0C1D2E3F4A00} Bar\n");
    let catalog = [bar::factory(w.desc.clone(), w.log.clone())];
    let again = Registry::load(Com::new(), &text, &catalog).unwrap();
    assert_eq!(again.dump(), text);
    let bad = Registry::load(Com::new(), "CLSID {nope} Bar\n", &catalog)
        .err()
        .unwrap();
    assert!(matches!(bad, ComError::RegistryText { line: 1, .. }));
    let missing = Registry::load(
        Com::new(),
        "# c\n\nCLSID {6F1E2A10-3C4D-4E5F-8A9B-0C1D2E3F4A00} Baz\n",
        &catalog,
    );
    assert!(matches!(missing.err().unwrap(), ComError::RegistryText { line: 3, .. }));
}

#[test]
fn witness_is_checked() {
    let mut w = world();
    let ix = w.create("IX");
    assert!(ix.expect("IX").is_ok());
    assert!(matches!(ix.expect("IY"), Err(ComError::WitnessMismatch { .. })));
    let forged = InterfaceRef {
        iid: Iid::new("IX", Guid::from_u128(3)),
        ..ix.clone()
    };
    assert!(matches!(
        call_method(&mut w.m, &w.desc, &forged, "FooX", &[]),
        Err(ComError::WitnessMismatch { .. })
    ));
    assert!(matches!(
        call_method(&mut w.m, &w.desc, &ix, "FooY", &[]),
        Err(ComError::UnknownMethod { .. })
    ));
}

#[test]
fn raw_query_interface_through_memory() {
    let mut w = world();
    let ix = w.create("IX");
    let vt = w.m.read_word(ix.addr).unwrap();
    let qi_addr = w.m.read_word(Addr::new(vt)).unwrap();
    let qi = w.m.addr_to_fun(Addr::new(qi_addr)).unwrap();
    let g = w.m.alloc_words(&w.iid("IY").guid().to_words()).unwrap();
    let out = w.m.alloc(1).unwrap();
    assert_eq!(qi(&mut w.m, &[ix.addr.word(), g.word(), out.word()]).unwrap(), S_OK);
    let iy = w.m.read_word(out).unwrap();
    assert_eq!(w.reg.com().owner_of(Addr::new(iy)), Some(ix.owner));
    assert_eq!(qi(&mut w.m, &[ix.addr.word(), g.word(), 0]).unwrap(), E_POINTER);
    assert!(matches!(
        qi(&mut w.m, &[ix.addr.word()]),
        Err(Fault::ArityMismatch { expected: 3, .. })
    ));
}

#[test]
fn typed_methods_with_results() {
    let src = r#"
        interface ICalc : IUnknown {
          HRESULT Add ([in] int a, [in] int b, [out] int *sum);
          int Neg ([in] int a);
          HRESULT Fail ();
        }
    "#;
    let unit = crate::idl::compile_unit(src, "calc.idl").unwrap();
    let manifest = crate::binding::Manifest::parse("IID ICalc {00000000-0000-0000-0000-0000000000C1}").unwrap();
    let desc = Rc::new(
        crate::binding::build_binding(
            &unit,
            crate::binding::Mode::Com,
            crate::binding::Level::Auto,
            Some(&manifest),
        )
        .unwrap(),
    );
    let mut m = Machine::new();
    let com = Com::new();
    let id = com.new_object(&mut m, None).unwrap();
    let impls: BTreeMap<String, MethodImpl> = BTreeMap::from([
        (
            "Add".to_string(),
            method_impl(|_, _, a| {
                let s = a[0].as_int().unwrap().wrapping_add(a[1].as_int().unwrap());
                Ok(vec![Value::Int(s), Value::Int(0)])
            }),
        ),
        (
            "Neg".to_string(),
            method_impl(|_, _, a| Ok(vec![Value::Int(-a[0].as_int().unwrap())])),
        ),
        (
            "Fail".to_string(),
            method_impl(|_, _, _| Ok(vec![Value::Int(E_FAIL as i32)])),
        ),
    ]);
    let calc = implement(&mut m, &com, id, &desc, "ICalc", &impls).unwrap();
    assert_eq!(
        call_method(&mut m, &desc, &calc, "Add", &[Value::Int(2), Value::Int(40)]).unwrap(),
        [Value::Int(42)]
    );
    assert_eq!(
        call_method(&mut m, &desc, &calc, "Neg", &[Value::Int(5)]).unwrap(),
        [Value::Int(-5)]
    );
    assert_eq!(
        call_method(&mut m, &desc, &calc, "Fail", &[]),
        Err(ComError::Failed(E_FAIL))
    );
    let missing = BTreeMap::new();
    assert!(matches!(
        implement(&mut m, &com, id, &desc, "ICalc", &missing),
        Err(ComError::UnknownMethod { .. })
    ));
}

#[derive(Clone, Debug)]
enum Op {
    Qi(usize, usize),
    AddRef(usize),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![
            (0usize..3, 0usize..3).prop_map(|(a, b)| Op::Qi(a, b)),
            (0usize..3).prop_map(Op::AddRef)
        ],
        0..20,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn balanced_sequences_conserve_count(seq in ops(), shuffle in any::<u64>()) {
        let mut w = world();
        let com = w.reg.com().clone();
        let ix = w.create("IX");
        let names = [Iid::iunknown(), w.iid("IX"), w.iid("IY")];
        let start = com.refcount(ix.owner).unwrap();
        let mut held = vec![ix.clone()];
        let mut to_release = Vec::new();
        for op in seq {
            match op {
                Op::Qi(from, to) => {
                    let src = held[from % held.len()].clone();
                    let r = query_interface(&mut w.m, &src, &names[to]).unwrap();
                    held.push(r.clone());
                    to_release.push(r);
                }
                Op::AddRef(k) => {
                    let r = held[k % held.len()].clone();
                    add_ref(&mut w.m, &r).unwrap();
                    to_release.push(r);
                }
            }
        }
        let n = to_release.len();
        prop_assert_eq!(com.refcount(ix.owner), Some(start + n as u32));
        let mut k = shuffle;
        while !to_release.is_empty() {
            let r = to_release.remove((k as usize) % to_release.len());
            k = k.rotate_left(7) ^ 0x9E37_79B9;
            release(&mut w.m, &r).unwrap();
        }
        prop_assert_eq!(com.refcount(ix.owner), Some(start));
    }
}
