use std::cell::RefCell;
use std::rc::Rc;

use proptest::prelude::*;

use super::*;
use crate::binding::{build_binding, Mode};
use crate::idl::compile_unit;
use crate::wordmem::word_fn;

const APPENDIX_A: &str = include_str!("../../idl/appendix_a.idl");
const TIME: &str = include_str!("../../idl/time.idl");

fn desc(src: &str, level: Level) -> BindingDesc {
    build_binding(&compile_unit(src, "t.idl").unwrap(), Mode::Dynamic, level, None).unwrap()
}

fn w32() -> BindingDesc {
    desc(APPENDIX_A, Level::Auto)
}

fn method<'d>(d: &'d BindingDesc, iface: &str, name: &str) -> &'d LiftedSig {
    d.interface(iface).unwrap().method(name).unwrap()
}

/// Little-endian byte packing written independently of the library.
fn byte_pack_oracle(s: &str) -> Vec<u32> {
    let mut bytes: Vec<u8> = s.bytes().collect();
    bytes.push(0);
    while !bytes.len().is_multiple_of(4) {
        bytes.push(0);
    }
    (0..bytes.len() / 4)
        .map(|i| {
            bytes[4 * i] as u32
                + ((bytes[4 * i + 1] as u32) << 8)
                + ((bytes[4 * i + 2] as u32) << 16)
                + ((bytes[4 * i + 3] as u32) << 24)
        })
        .collect()
}

fn point(x: i32, y: i32) -> Value {
    Value::record([("x", Value::Int(x)), ("y", Value::Int(y))])
}

#[test]
fn scalar_examples() {
    let d = w32();
    let mut m = Machine::new();
    assert_eq!(
        marshal_value(&mut m, &d, &Value::Bool(true), &SemType::Bool)
            .unwrap()
            .words,
        [1]
    );
    let p = SemType::Record { name: "POINT".into() };
    assert_eq!(marshal_value(&mut m, &d, &point(3, 4), &p).unwrap().words, [3, 4]);
    assert_eq!(
        unmarshal_value(&mut m, &d, &[1], &SemType::Bool).unwrap(),
        Value::Bool(true)
    );
    assert_eq!(
        unmarshal_value(&mut m, &d, &[7], &SemType::Bool).unwrap(),
        Value::Bool(true)
    );
    let opts = SemType::Enum { name: "OPTS".into() };
    assert_eq!(
        unmarshal_value(&mut m, &d, &[2], &opts).unwrap(),
        Value::Enum("CS_HREDRAW".into())
    );
    assert!(matches!(
        unmarshal_value(&mut m, &d, &[0x1234], &opts),
        Err(MarshalError::Decode { .. })
    ));
    assert_eq!(
        marshal_value(&mut m, &d, &Value::Enum("WS_POPUP".into()), &opts)
            .unwrap()
            .words,
        [0x8000_0000]
    );
}

#[test]
fn string8_packing_matches_byte_oracle() {
    let d = w32();
    let mut m = Machine::new();
    let packed = marshal_value(&mut m, &d, &Value::str("ab"), &SemType::String8).unwrap();
    let a = Addr::new(packed.words[0]);
    assert_eq!(m.read(a, 1).unwrap(), [0x0000_6261]);
    for s in ["", "a", "abc", "abcd", "BouncingSMLNJ", "#32512"] {
        assert_eq!(pack_string8(s).unwrap(), byte_pack_oracle(s), "{s:?}");
    }
    assert_eq!(read_string8(&mut m, a).unwrap(), "ab");
    packed.free(&mut m).unwrap();
    assert_eq!(m.live_allocations(), 0);
    assert_eq!(pack_string8("a\0b"), Err(MarshalError::BadString));
}

#[test]
fn string16_packs_two_units_per_word() {
    assert_eq!(pack_string16("ab").unwrap(), [0x0062_0061, 0]);
    assert_eq!(pack_string16("abc").unwrap(), [0x0062_0061, 0x0000_0063]);
    let mut m = Machine::new();
    let a = m.alloc_words(&pack_string16("Größe €").unwrap()).unwrap();
    assert_eq!(read_string16(&mut m, a).unwrap(), "Größe €");
}

#[test]
fn layouts() {
    let d = w32();
    assert_eq!(layout_of(&SemType::Record { name: "POINT".into() }, &d).unwrap(), 2);
    assert_eq!(
        layout_of(
            &SemType::Record {
                name: "WNDCLASSEX".into()
            },
            &d
        )
        .unwrap(),
        12
    );
    assert_eq!(layout_of(&SemType::Bool, &d).unwrap(), 1);
    assert_eq!(layout_of(&SemType::String8, &d).unwrap(), 1);
    assert!(matches!(
        layout_of(&SemType::Record { name: "NOPE".into() }, &d),
        Err(MarshalError::UnknownType(_))
    ));
}

#[test]
fn gettime_lifts_three_out_records() {
    let d = desc(TIME, Level::Auto);
    let sig = method(&d, "Time", "gettime");
    let mut m = Machine::new();
    let stub = word_fn(|m, args| {
        for (k, a) in args.iter().enumerate() {
            let k = k as u32;
            m.store(Addr::new(*a), &[2 * k + 1, 2 * k + 2])?;
        }
        Ok(0)
    });
    let f = m.fun_to_addr(&stub);
    let out = call(&mut m, &d, sig, f, &[]).unwrap();
    let tv = |s, u| Value::record([("sec", Value::Int(s)), ("usec", Value::Int(u))]);
    assert_eq!(out, [tv(1, 2), tv(3, 4), tv(5, 6)]);
    assert_eq!(m.live_allocations(), 0);
}

#[test]
fn show_window_receives_exact_words() {
    let d = w32();
    let sig = method(&d, "User", "ShowWindow");
    let mut m = Machine::new();
    let seen = Rc::new(RefCell::new(Vec::new()));
    let spy = {
        let seen = seen.clone();
        word_fn(move |_, args| {
            seen.borrow_mut().push(args.to_vec());
            Ok(1)
        })
    };
    let lib = m.define_library("user32.dll");
    m.define_symbol(&lib, "ShowWindow", crate::wordmem::Convention::Pascal, 2, spy);
    let lib = m.open_library("user32.dll").unwrap();
    let f = m.get_function(&lib, "ShowWindow").unwrap();
    let out = call(&mut m, &d, sig, f, &[Value::Handle(5), Value::Int(1)]).unwrap();
    assert_eq!(out, [Value::Bool(true)]);
    assert_eq!(*seen.borrow(), [vec![5, 1]]);
    let e = call(&mut m, &d, sig, f, &[Value::Handle(5)]).unwrap_err();
    assert!(
        matches!(
            e,
            MarshalError::Arity {
                expected: 2,
                got: 1,
                ..
            }
        ),
        "{e}"
    );
}

#[test]
fn symbol_arity_is_checked_by_the_machine() {
    let d = w32();
    let sig = method(&d, "User", "ShowWindow");
    let mut m = Machine::new();
    let lib = m.define_library("user32.dll");
    let f = m.define_symbol(
        &lib,
        "ShowWindow",
        crate::wordmem::Convention::Pascal,
        3,
        word_fn(|_, _| Ok(1)),
    );
    let e = call(&mut m, &d, sig, f, &[Value::Handle(5), Value::Int(1)]).unwrap_err();
    assert!(
        matches!(
            e,
            MarshalError::Fault(Fault::ArityMismatch {
                expected: 3,
                got: 2,
                ..
            })
        ),
        "{e}"
    );
}

fn wndclass(proc_: WordFn, class: &str) -> Value {
    Value::record([
        ("cbSize", Value::Word(48)),
        ("style", Value::Int(3)),
        ("lpfnWndProc", Value::Callback(proc_)),
        ("cbClsExtra", Value::Int(0)),
        ("cbWndExtra", Value::Int(0)),
        ("hInstance", Value::Handle(1)),
        ("hIcon", Value::Handle(2)),
        ("hCursor", Value::Handle(3)),
        ("hbrBackground", Value::Handle(4)),
        ("lpszMenuName", Value::str("")),
        ("lpszClassName", Value::str(class)),
        ("hIconSm", Value::Handle(2)),
    ])
}

#[test]
fn by_ref_record_is_packed_and_freed() {
    let d = Rc::new(w32());
    let sig = method(&d, "User", "RegisterClassExA").clone();
    let mut m = Machine::new();
    let seen = Rc::new(RefCell::new(None));
    let callee = {
        let (d, seen) = (d.clone(), seen.clone());
        word_fn(move |m, args| {
            let t = SemType::Record {
                name: "WNDCLASSEX".into(),
            };
            let v = read_value(m, &d, Addr::new(args[0]), &t).map_err(|e| Fault::Raised(e.to_string()))?;
            *seen.borrow_mut() = Some(v);
            Ok(7)
        })
    };
    let f = m.fun_to_addr(&callee);
    let wp = word_fn(|_, _| Ok(0));
    let wc = wndclass(wp.clone(), "BouncingSMLNJ");
    assert_eq!(
        call(&mut m, &d, &sig, f, std::slice::from_ref(&wc)).unwrap(),
        [Value::Int(7)]
    );
    assert_eq!(seen.borrow().as_ref(), Some(&wc));
    assert_eq!(m.live_allocations(), 0);
}

#[test]
fn packing_error_aborts_before_the_call() {
    let d = w32();
    let sig = method(&d, "User", "CreateWindowExA");
    let mut m = Machine::new();
    let calls = Rc::new(RefCell::new(0));
    let f = {
        let calls = calls.clone();
        word_fn(move |_, _| {
            *calls.borrow_mut() += 1;
            Ok(1)
        })
    };
    let f = m.fun_to_addr(&f);
    let mut ins = vec![
        Value::Int(0),
        Value::str("cls"),
        Value::str("bad\0title"),
        Value::Int(0),
        Value::Int(0),
        Value::Int(0),
        Value::Int(500),
        Value::Int(300),
        Value::Handle(0),
        Value::Handle(0),
        Value::Handle(0),
        Value::Addr(Addr::NULL),
    ];
    assert_eq!(call(&mut m, &d, sig, f, &ins), Err(MarshalError::BadString));
    ins[2] = Value::str("title");
    ins[3] = Value::Bool(true);
    assert!(matches!(
        call(&mut m, &d, sig, f, &ins),
        Err(MarshalError::TypeMismatch { .. })
    ));
    assert_eq!(*calls.borrow(), 0);
    assert_eq!(m.live_allocations(), 0);
    ins[3] = Value::Int(0);
    call(&mut m, &d, sig, f, &ins).unwrap();
    assert_eq!(*calls.borrow(), 1);
    assert_eq!(m.live_allocations(), 0);
}

#[test]
fn arrays_check_their_length_parameter() {
    let d = w32();
    let sig = method(&d, "Gdi", "PolyLineTo");
    let mut m = Machine::new();
    let seen = Rc::new(RefCell::new(Vec::new()));
    let f = {
        let seen = seen.clone();
        word_fn(move |m, args| {
            let pts = m.read(Addr::new(args[1]), 2 * args[2] as usize)?;
            *seen.borrow_mut() = pts;
            Ok(1)
        })
    };
    let f = m.fun_to_addr(&f);
    let pts = Value::Array(vec![point(1, 2), point(3, 4)]);
    call(&mut m, &d, sig, f, &[Value::Handle(9), pts.clone(), Value::Int(2)]).unwrap();
    assert_eq!(*seen.borrow(), [1, 2, 3, 4]);
    let e = call(&mut m, &d, sig, f, &[Value::Handle(9), pts, Value::Int(3)]).unwrap_err();
    assert!(
        matches!(
            e,
            MarshalError::Length {
                expected: 3,
                got: 2,
                ..
            }
        ),
        "{e}"
    );
    assert_eq!(m.live_allocations(), 0);
}

#[test]
fn abstract_level_hands_out_records_by_address() {
    let d = desc(APPENDIX_A, Level::Abstract);
    let sig = method(&d, "User", "BeginPaint");
    let mut m = Machine::new();
    let f = m.fun_to_addr(&word_fn(|m, args| {
        m.store(Addr::new(args[1]), &[11, 1, 0, 0, 500, 300, 0, 0])?;
        Ok(11)
    }));
    let out = call(&mut m, &d, sig, f, &[Value::Handle(3)]).unwrap();
    let Value::Addr(ps) = out[0] else { panic!("{out:?}") };
    assert_eq!(out[1], Value::Handle(11));
    assert_eq!(m.live_allocations(), 1);
    let v = read_value(
        &mut m,
        &d,
        ps,
        &SemType::Record {
            name: "PAINTSTRUCT".into(),
        },
    )
    .unwrap();
    assert_eq!(v.field("rcPaint").unwrap().field("right"), Some(&Value::Int(500)));
    m.free(ps).unwrap();

    let auto = w32();
    let out = call(
        &mut m,
        &auto,
        method(&auto, "User", "BeginPaint"),
        f,
        &[Value::Handle(3)],
    )
    .unwrap();
    assert_eq!(out[0].field("fErase"), Some(&Value::Bool(true)));
    assert_eq!(m.live_allocations(), 0);
}

#[test]
fn lifted_callbacks_decode_and_encode() {
    let d = Rc::new(w32());
    let sig = d.callback("WNDPROC").unwrap().clone();
    let f = lift_callback(d.clone(), sig.clone(), |_, args| {
        assert_eq!(args[0], Value::Handle(4));
        Ok(Value::Int(args[1].as_int().unwrap() + args[3].as_int().unwrap()))
    });
    let mut m = Machine::new();
    let a = m.fun_to_addr(&f);
    let r = call(
        &mut m,
        &d,
        &sig,
        a,
        &[Value::Handle(4), Value::Int(5), Value::Int(0), Value::Int(-7)],
    )
    .unwrap();
    assert_eq!(r, [Value::Int(-2)]);
}

#[test]
fn callback_fields_round_trip_by_identity() {
    let d = w32();
    let mut m = Machine::new();
    let wp = word_fn(|_, _| Ok(0));
    let t = SemType::Record {
        name: "WNDCLASSEX".into(),
    };
    let v = wndclass(wp, "C");
    let packed = marshal_value(&mut m, &d, &v, &t).unwrap();
    assert_eq!(packed.words.len(), 12);
    assert_eq!(unmarshal_value(&mut m, &d, &packed.words, &t).unwrap(), v);
    assert_eq!(packed.blocks.len(), 2);
    packed.free(&mut m).unwrap();
}

#[test]
fn record_field_set_must_match() {
    let d = w32();
    let mut m = Machine::new();
    let t = SemType::Record { name: "POINT".into() };
    let missing = Value::record([("x", Value::Int(1))]);
    assert!(matches!(
        marshal_value(&mut m, &d, &missing, &t),
        Err(MarshalError::Field {
            reason: "missing field",
            ..
        })
    ));
    let extra = Value::record([("x", Value::Int(1)), ("y", Value::Int(1)), ("z", Value::Int(1))]);
    assert!(matches!(
        marshal_value(&mut m, &d, &extra, &t),
        Err(MarshalError::Field {
            reason: "unknown field",
            ..
        })
    ));
}

#[test]
fn call_plan_order_matches_declaration() {
    let d = w32();
    let plan = CallPlan::new(method(&d, "User", "CreateWindowExA"), &d).unwrap();
    assert_eq!(plan.actions.len(), 12);
    assert_eq!(plan.actions[1], Action::PackString);
    assert_eq!(plan.actions[0], Action::PassWord);
    let plan = CallPlan::new(method(&d, "User", "BeginPaint"), &d).unwrap();
    assert_eq!(plan.actions, [Action::PassWord, Action::AllocOut { size: 8 }]);
    let plan = CallPlan::new(method(&d, "User", "RegisterClassExA"), &d).unwrap();
    assert_eq!(plan.actions, [Action::PassAddrOfPacked { size: 12 }]);
}

/// A record type exercising every scalar kind plus a nested record.
const MIXED: &str = r#"
typedef int HANDLE;
typedef [string] char *STRING;
typedef [string] wchar_t *WSTRING;
typedef enum { RED = 1, GREEN = 2, BLUE = 0wx80000000 } COLOR;
typedef struct { int x; int y; } POINT;
typedef struct {
  int i;
  UINT w;
  boolean b;
  HANDLE h;
  COLOR c;
  STRING s;
  WSTRING ws;
  POINT p;
  LPVOID addr;
} MIXED;
interface Spy {
  int f ([in] int a, [in] UINT b, [in] boolean c, [in] HANDLE d, [in] COLOR e, [in] POINT p, [in,ref] MIXED *m);
}
"#;

fn mixed_strategy() -> impl Strategy<Value = Value> {
    (
        any::<i32>(),
        any::<u32>(),
        any::<bool>(),
        any::<u32>(),
        prop::sample::select(vec!["RED", "GREEN", "BLUE"]),
        "[a-zA-Z0-9 #]{0,12}",
        "[a-zé€]{0,6}",
        (any::<i32>(), any::<i32>()),
        any::<u32>(),
    )
        .prop_map(|(i, w, b, h, c, s, ws, (x, y), a)| {
            Value::record([
                ("i", Value::Int(i)),
                ("w", Value::Word(w)),
                ("b", Value::Bool(b)),
                ("h", Value::Handle(h)),
                ("c", Value::Enum(c.into())),
                ("s", Value::Str(s)),
                ("ws", Value::Str(ws)),
                ("p", point(x, y)),
                ("addr", Value::Addr(Addr::new(a))),
            ])
        })
}

proptest! {
    #[test]
    fn prop_record_round_trip(v in mixed_strategy()) {
        let d = desc(MIXED, Level::Auto);
        let mut m = Machine::new();
        let t = SemType::Record { name: "MIXED".into() };
        let packed = marshal_value(&mut m, &d, &v, &t).unwrap();
        prop_assert_eq!(packed.words.len(), 10);
        prop_assert_eq!(unmarshal_value(&mut m, &d, &packed.words, &t).unwrap(), v.clone());
        // Field words sit at the offsets the layout reports.
        let layout = d.record("MIXED").unwrap();
        for f in &layout.fields {
            let n = d.layout_of(&f.ty.sem).unwrap() as usize;
            let at = f.offset as usize;
            let alone = marshal_value(&mut m, &d, v.field(&f.name).unwrap(), &f.ty.sem).unwrap();
            if !matches!(f.ty.sem, SemType::String8 | SemType::String16) {
                prop_assert_eq!(&packed.words[at..at + n], alone.words.as_slice());
            }
            alone.free(&mut m).unwrap();
        }
        packed.free(&mut m).unwrap();
        prop_assert_eq!(m.live_allocations(), 0);
    }

    #[test]
    fn prop_abi_order_and_no_leaks(
        a in any::<i32>(), b in any::<u32>(), c in any::<bool>(), h in any::<u32>(),
        e in prop::sample::select(vec![("RED", 1u32), ("GREEN", 2), ("BLUE", 0x8000_0000)]),
        (x, y) in (any::<i32>(), any::<i32>()),
        mixed in mixed_strategy(),
    ) {
        let d = desc(MIXED, Level::Auto);
        let sig = d.interface("Spy").unwrap().method("f").unwrap().clone();
        let mut m = Machine::new();
        let seen = Rc::new(RefCell::new(Vec::new()));
        let spy = {
            let seen = seen.clone();
            word_fn(move |m, args| {
                let mut rec = args.to_vec();
                rec.extend(m.read(Addr::new(*args.last().unwrap()), 10)?);
                *seen.borrow_mut() = rec;
                Ok(args[0])
            })
        };
        let f = m.fun_to_addr(&spy);
        let before = m.live_allocations();
        let ins = [
            Value::Int(a), Value::Word(b), Value::Bool(c), Value::Handle(h),
            Value::Enum(e.0.into()), point(x, y), mixed.clone(),
        ];
        let out = call(&mut m, &d, &sig, f, &ins).unwrap();
        prop_assert_eq!(out, vec![Value::Int(a)]);
        prop_assert_eq!(m.live_allocations(), before);
        let seen = seen.borrow();
        prop_assert_eq!(&seen[..7], &[a as u32, b, c as u32, h, e.1, x as u32, y as u32][..]);
        let expected = marshal_value(&mut m, &d, &mixed, &SemType::Record { name: "MIXED".into() }).unwrap();
        prop_assert_eq!(&seen[8..11], &expected.words[..3]);
        prop_assert_eq!(seen.len(), 8 + 10);
    }
}
