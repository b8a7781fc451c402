use std::rc::Rc;

use proptest::prelude::*;

use super::counter;
use super::*;
use crate::binding::BindingDesc;
use crate::com::{call_method, clsid_of, iid_of, query_interface, release, Iid, Registry};
use crate::wordmem::Machine;

struct World {
    m: Machine,
    reg: Registry,
    log: counter::Log,
    desc: Rc<BindingDesc>,
}

fn world() -> World {
    let desc = counter::binding();
    let log = counter::Log::default();
    let mut reg = Registry::new(Com::new());
    reg.register_class_object(counter::factory(desc.clone(), log.clone()))
        .unwrap();
    World {
        m: Machine::new(),
        reg,
        log,
        desc,
    }
}

impl World {
    fn create(&mut self) -> InterfaceRef {
        let iid = iid_of(&self.desc, "ICounter").unwrap();
        let clsid = clsid_of(&self.desc, "Counter").unwrap();
        self.reg.create_instance(&mut self.m, clsid, &iid).unwrap()
    }
}

#[test]
fn dispids_follow_declaration_order() {
    let mut w = world();
    let d = w.create();
    for (k, name) in ["Add", "Total", "Parity", "Measure", "Scale"].iter().enumerate() {
        assert_eq!(get_ids_of_names(&mut w.m, &d, name).unwrap(), k as DispId + 1);
    }
    assert_eq!(get_ids_of_names(&mut w.m, &d, "add").unwrap(), 1);
    assert_eq!(get_ids_of_names(&mut w.m, &d, "TOTAL").unwrap(), 2);
    assert_eq!(
        get_ids_of_names(&mut w.m, &d, "Quux"),
        Err(AutoError::UnknownName("Quux".into()))
    );
    assert_eq!(
        get_ids_of_names(&mut w.m, &d, "Quux").unwrap_err().hresult(),
        0x8002_0006
    );
}

#[test]
fn dual_vtable_layout() {
    let mut w = world();
    let d = w.create();
    let vt = crate::wordmem::Addr::new(w.m.read_word(d.addr).unwrap());
    assert_eq!(w.m.block_len(vt), Some(3 + 4 + 5));
    let disp = query_interface(&mut w.m, &d, &Iid::idispatch()).unwrap();
    assert_eq!(disp.addr, d.addr);
    assert_eq!(get_type_info_count(&mut w.m, &disp).unwrap(), 0);
    let out = w.m.alloc(1).unwrap();
    assert_eq!(call_slot(&mut w.m, &d, 4, &[0, 0, out.word()]).unwrap(), E_NOTIMPL);
    release(&mut w.m, &disp).unwrap();
}

#[test]
fn invoke_matches_vtable() {
    let mut w = world();
    let d = w.create();
    let desc = w.desc.clone();
    assert_eq!(
        invoke_by_name(&mut w.m, &d, "Add", &[Variant::I4(5)]).unwrap(),
        Variant::Empty
    );
    call_method(&mut w.m, &desc, &d, "Add", &[Value::Int(7)]).unwrap();
    assert_eq!(invoke_by_name(&mut w.m, &d, "Total", &[]).unwrap(), Variant::I4(12));
    assert_eq!(
        call_method(&mut w.m, &desc, &d, "Total", &[]).unwrap(),
        [Value::Int(12)]
    );
    assert_eq!(*w.log.borrow(), ["Add 5", "Add 7", "Total", "Total"]);
    let r = invoke_by_name(&mut w.m, &d, "Measure", &[Variant::Bstr("héllo".into())]).unwrap();
    assert_eq!(r, Variant::I4(6));
    let r = invoke_by_name(&mut w.m, &d, "Parity", &[Variant::Bool(true), Variant::UI4(0b111)]).unwrap();
    assert_eq!(r, Variant::Bool(false));
}

#[test]
fn invoke_errors() {
    let mut w = world();
    let d = w.create();
    let total = get_ids_of_names(&mut w.m, &d, "Total").unwrap();
    let e = invoke(&mut w.m, &d, total, &[Variant::I4(1)]).unwrap_err();
    assert_eq!(e, AutoError::BadParamCount { got: 1 });
    assert_eq!(e.hresult(), 0x8002_000E);
    let e = invoke_by_name(&mut w.m, &d, "Add", &[Variant::Bstr("5".into())]).unwrap_err();
    assert_eq!(e, AutoError::TypeMismatch { index: Some(0) });
    assert_eq!(e.hresult(), 0x8002_0005);
    let e = invoke_by_name(&mut w.m, &d, "Parity", &[Variant::Bool(true), Variant::Bool(false)]).unwrap_err();
    assert_eq!(e, AutoError::TypeMismatch { index: Some(1) });
    assert_eq!(invoke(&mut w.m, &d, 99, &[]), Err(AutoError::MemberNotFound(99)));
    assert!(w.log.borrow().is_empty());
}

#[test]
fn invoke_frees_its_temporaries() {
    let mut w = world();
    let d = w.create();
    let before = w.m.live_allocations();
    for _ in 0..3 {
        invoke_by_name(&mut w.m, &d, "Measure", &[Variant::Bstr("abc".into())]).unwrap();
        let _ = invoke_by_name(&mut w.m, &d, "Add", &[Variant::Bstr("x".into())]);
        let _ = invoke_by_name(&mut w.m, &d, "Nope", &[]);
    }
    assert_eq!(w.m.live_allocations(), before);
}

#[test]
fn non_dual_interfaces_are_rejected() {
    let desc = crate::com::bar::binding();
    assert_eq!(
        DispTable::new(desc.interface("IX").unwrap()),
        Err(AutoError::NotDual("IX".into()))
    );
}

#[test]
fn coercion_rules() {
    let desc = counter::binding();
    assert_eq!(
        coerce(&desc, &Variant::I4(-1), &SemType::Word32).unwrap(),
        Value::Word(0xFFFF_FFFF)
    );
    assert_eq!(
        coerce(&desc, &Variant::UI4(0xFFFF_FFFF), &SemType::Int32).unwrap(),
        Value::Int(-1)
    );
    assert_eq!(
        coerce(&desc, &Variant::Bool(true), &SemType::Bool).unwrap(),
        Value::Bool(true)
    );
    let mismatch = Err(AutoError::TypeMismatch { index: None });
    assert_eq!(coerce(&desc, &Variant::Bstr("5".into()), &SemType::Int32), mismatch);
    assert_eq!(coerce(&desc, &Variant::I4(5), &SemType::String8), mismatch);
    assert_eq!(coerce(&desc, &Variant::Bool(true), &SemType::Int32), mismatch);
    assert_eq!(coerce(&desc, &Variant::I4(1), &SemType::Bool), mismatch);
    assert_eq!(coerce(&desc, &Variant::Empty, &SemType::Int32), mismatch);
}

#[test]
fn variant_memory_form() {
    let mut m = Machine::new();
    let at = m.alloc(VARIANT_WORDS).unwrap();
    Variant::Bool(true).store(&mut m, at).unwrap();
    assert_eq!(m.read(at, 4).unwrap(), [11, 0, 0xFFFF, 0]);
    Variant::Bstr("ab".into()).store(&mut m, at).unwrap();
    let w = m.read(at, 4).unwrap();
    assert_eq!(w[0], 8);
    let b = crate::wordmem::Addr::new(w[2]);
    assert_eq!(m.read_word(Machine::offset(b, -1)).unwrap(), 4);
    assert_eq!(m.read(b, 2).unwrap(), [0x0062_0061, 0]);
    assert_eq!(Variant::load(&mut m, at).unwrap(), Variant::Bstr("ab".into()));
    Variant::clear(&mut m, at).unwrap();
    assert_eq!(m.live_allocations(), 1);
    m.store(at, &[12, 0, 0, 0]).unwrap();
    assert_eq!(Variant::load(&mut m, at), Err(AutoError::BadVariant(12)));
}

fn variant_strategy() -> impl Strategy<Value = Variant> {
    prop_oneof![
        Just(Variant::Empty),
        any::<i32>().prop_map(Variant::I4),
        any::<u32>().prop_map(Variant::UI4),
        any::<bool>().prop_map(Variant::Bool),
        "[a-z€ ]{0,8}".prop_map(Variant::Bstr),
    ]
}

/// A method name and arguments that coerce to its parameters.
fn call_strategy() -> impl Strategy<Value = (String, Vec<Variant>)> {
    let int = prop_oneof![any::<i32>().prop_map(Variant::I4), any::<u32>().prop_map(Variant::UI4)];
    prop_oneof![
        int.clone().prop_map(|v| ("Add".to_string(), vec![v])),
        Just(("Total".to_string(), vec![])),
        (any::<bool>(), int.clone()).prop_map(|(b, v)| ("Parity".to_string(), vec![Variant::Bool(b), v])),
        "[a-zA-Z0-9 é]{0,10}".prop_map(|s| ("Measure".to_string(), vec![Variant::Bstr(s)])),
        (int.clone(), int).prop_map(|(a, b)| ("Scale".to_string(), vec![a, b])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn variant_round_trip(v in variant_strategy()) {
        let mut m = Machine::new();
        let at = m.alloc(VARIANT_WORDS).unwrap();
        v.store(&mut m, at).unwrap();
        prop_assert_eq!(Variant::load(&mut m, at).unwrap(), v);
        Variant::clear(&mut m, at).unwrap();
        prop_assert_eq!(m.live_allocations(), 1);
    }

    #[test]
    fn dual_paths_agree(calls in prop::collection::vec(call_strategy(), 1..12)) {
        let mut a = world();
        let mut b = world();
        let da = a.create();
        let db = b.create();
        let desc = a.desc.clone();
        let table = DispTable::new(desc.interface("ICounter").unwrap()).unwrap();
        for (name, args) in &calls {
            let via_dispatch = invoke_by_name(&mut a.m, &da, name, args).unwrap();
            let id = table.id_of(name).unwrap();
            let entry = table.entry(id).unwrap();
            let ins: Vec<Value> = entry.sig.in_params().zip(args)
                .map(|(p, v)| coerce(&desc, v, &p.ty.sem).unwrap())
                .collect();
            let out = call_method(&mut b.m, &desc, &db, name, &ins).unwrap();
            prop_assert_eq!(via_dispatch, results_as_variant(&desc, entry, &out).unwrap());
        }
        prop_assert_eq!(&*a.log.borrow(), &*b.log.borrow());
    }

    #[test]
    fn coerce_marshal_round_trip(v in variant_strategy()) {
        let desc = counter::binding();
        let mut m = Machine::new();
        for t in [SemType::Int32, SemType::Word32, SemType::Bool, SemType::String8] {
            if let Ok(x) = coerce(&desc, &v, &t) {
                let p = crate::marshal::marshal_value(&mut m, &desc, &x, &t).unwrap();
                prop_assert_eq!(crate::marshal::unmarshal_value(&mut m, &desc, &p.words, &t).unwrap(), x);
                p.free(&mut m).unwrap();
            }
        }
    }
}
