//! `user32.dll` and `gdi32.dll` as word functions over a [`SimWorld`].
//! Every call is recorded in the trace before it takes effect.

use std::rc::Rc;

use super::world::{CreateParams, SimWorld, TraceArg, WndClass};
use super::SimError;
use crate::binding::{BindingDesc, SemType};
use crate::marshal::{read_string8, read_value, Value};
use crate::wordmem::{word_fn, Addr, Convention, Fault, Machine, Word, WordFn};

/// Size in bytes `RegisterClassExA` insists on.
pub const WNDCLASSEX_BYTES: Word = 48;

fn string(m: &mut Machine, w: Word) -> Result<String, Fault> {
    if w == 0 {
        return Ok(String::new());
    }
    read_string8(m, Addr::new(w)).map_err(|e| Fault::Raised(e.to_string()))
}

fn ints(args: &[Word]) -> Vec<TraceArg> {
    args.iter().map(|w| TraceArg::Int(*w as i32)).collect()
}

fn handle_field(v: &Value, name: &str) -> Word {
    v.field(name).and_then(Value::as_word).unwrap_or(0)
}

fn register_class(world: &SimWorld, desc: &BindingDesc, m: &mut Machine, args: &[Word]) -> Result<Word, Fault> {
    let at = Addr::new(args[0]);
    let raw = m.read(at, 12)?;
    let wc = read_value(
        m,
        desc,
        at,
        &SemType::Record {
            name: "WNDCLASSEX".into(),
        },
    )
    .map_err(|e| Fault::Raised(format!("RegisterClassExA: {e}")))?;
    let name = wc
        .field("lpszClassName")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let size = handle_field(&wc, "cbSize");
    let style = wc.field("style").and_then(Value::as_int).unwrap_or(0);
    world.record(
        "RegisterClassExA",
        &[
            TraceArg::Int(size as i32),
            TraceArg::Int(style),
            TraceArg::Str(name.clone()),
        ],
    );
    let wndproc = Addr::new(raw[2]);
    if size != WNDCLASSEX_BYTES || m.addr_to_fun(wndproc).is_err() {
        return Ok(0);
    }
    Ok(world.register_class_ex(WndClass {
        name,
        wndproc,
        style,
        hinstance: handle_field(&wc, "hInstance"),
        icon: handle_field(&wc, "hIcon"),
        cursor: handle_field(&wc, "hCursor"),
        brush: handle_field(&wc, "hbrBackground"),
    }))
}

fn create_window(world: &SimWorld, m: &mut Machine, a: &[Word]) -> Result<Word, Fault> {
    let p = CreateParams {
        ex_style: a[0] as i32,
        class: string(m, a[1])?,
        title: string(m, a[2])?,
        style: a[3] as i32,
        x: a[4] as i32,
        y: a[5] as i32,
        width: a[6] as i32,
        height: a[7] as i32,
        parent: a[8],
        menu: a[9],
        hinstance: a[10],
        param: a[11],
    };
    let mut rec = vec![
        TraceArg::Int(p.ex_style),
        p.class.as_str().into(),
        p.title.as_str().into(),
    ];
    rec.extend(ints(&a[3..]));
    world.record("CreateWindowExA", &rec);
    world.create_window_ex(m, &p)
}

fn begin_paint(world: &SimWorld, m: &mut Machine, a: &[Word]) -> Result<Word, Fault> {
    world.record("BeginPaint", &ints(&a[..1]));
    let Some(w) = world.window(a[0]).filter(|w| !w.destroyed) else {
        return Ok(0);
    };
    let hdc = world.gdi_record("GetDC", &ints(&a[..1]));
    let (_, _, cx, cy) = w.rect;
    m.store(Addr::new(a[1]), &[hdc, 1, 0, 0, cx as Word, cy as Word, 0, 0])?;
    Ok(hdc)
}

fn poly_line_to(world: &SimWorld, m: &mut Machine, a: &[Word]) -> Result<Word, Fault> {
    let n = a[2] as usize;
    let words = if n == 0 {
        Vec::new()
    } else {
        m.read(Addr::new(a[1]), 2 * n)?
    };
    let pts = words.chunks(2).map(|c| (c[0] as i32, c[1] as i32)).collect();
    Ok(world.gdi_record("PolyLineTo", &[TraceArg::Int(a[0] as i32), TraceArg::Points(pts)]))
}

/// The implementation of one exported function, or `None` if the
/// simulator does not provide it.
fn implementation(world: &SimWorld, desc: &Rc<BindingDesc>, name: &str) -> Option<WordFn> {
    let w = world.clone();
    let f: WordFn = match name {
        "RegisterClassExA" => {
            let desc = desc.clone();
            word_fn(move |m, a| register_class(&w, &desc, m, a))
        }
        "UnregisterClassA" => word_fn(move |m, a| {
            let class = string(m, a[0])?;
            w.record("UnregisterClassA", &[class.as_str().into(), TraceArg::Int(a[1] as i32)]);
            Ok(w.unregister_class(&class) as Word)
        }),
        "CreateWindowExA" => word_fn(move |m, a| create_window(&w, m, a)),
        "ShowWindow" => word_fn(move |_, a| {
            w.record("ShowWindow", &ints(a));
            w.show_window(a[0], a[1] as i32);
            Ok(1)
        }),
        "UpdateWindow" | "SetForegroundWindow" => {
            let op = name.to_string();
            word_fn(move |_, a| {
                w.record(&op, &ints(a));
                Ok(w.is_window(a[0]) as Word)
            })
        }
        "DestroyWindow" => word_fn(move |m, a| {
            w.record("DestroyWindow", &ints(a));
            Ok(w.destroy_window(m, a[0])? as Word)
        }),
        "DefWindowProcA" => word_fn(move |_, a| {
            w.record("DefWindowProcA", &ints(a));
            Ok(w.def_window_proc(a[0], a[1], a[2], a[3]))
        }),
        "PostQuitMessage" => word_fn(move |_, a| {
            w.record("PostQuitMessage", &ints(a));
            w.post_quit_message(a[0] as i32);
            Ok(0)
        }),
        "SetTimer" => word_fn(move |_, a| {
            w.record("SetTimer", &ints(a));
            Ok(w.set_timer(a[0], a[1], a[2], Addr::new(a[3])))
        }),
        "KillTimer" => word_fn(move |_, a| {
            w.record("KillTimer", &ints(a));
            Ok(w.kill_timer(a[0], a[1]) as Word)
        }),
        "BeginPaint" => word_fn(move |m, a| begin_paint(&w, m, a)),
        "EndPaint" => word_fn(move |_, a| {
            w.record("EndPaint", &ints(&a[..1]));
            Ok(1)
        }),
        "LoadIconA" | "LoadCursorA" => {
            let op = name.to_string();
            word_fn(move |m, a| {
                let s = string(m, a[1])?;
                Ok(w.gdi_record(&op, &[TraceArg::Int(a[0] as i32), s.as_str().into()]))
            })
        }
        "LoadImageA" => word_fn(move |m, a| {
            let s = string(m, a[1])?;
            let mut rec = vec![TraceArg::Int(a[0] as i32), s.as_str().into()];
            rec.extend(ints(&a[2..]));
            Ok(w.gdi_record("LoadImageA", &rec))
        }),
        "PolyLineTo" => word_fn(move |m, a| poly_line_to(&w, m, a)),
        "GetDC" | "ReleaseDC" | "LineTo" | "GetStockObject" | "CreateCompatibleDC" | "SelectObject" | "BitBlt"
        | "DeleteObject" | "DeleteDC" => {
            let op = name.to_string();
            word_fn(move |_, a| Ok(w.gdi_record(&op, &ints(a))))
        }
        _ => return None,
    };
    Some(f)
}

/// Defines every function of the binding's `[sml_source]` interfaces as
/// a Pascal symbol of the right arity.
pub fn install(world: &SimWorld, m: &mut Machine, desc: &Rc<BindingDesc>) -> Result<(), SimError> {
    for iface in &desc.interfaces {
        let Some(source) = &iface.source else { continue };
        let lib = m.define_library(source);
        for sig in &iface.methods {
            let f = implementation(world, desc, &sig.name).ok_or_else(|| SimError::UnknownApi(sig.name.clone()))?;
            m.define_symbol(&lib, &sig.name, Convention::Pascal, sig.abi_arity(), f);
        }
    }
    Ok(())
}
