//! Calls simulated foreign functions through a generated binding: a
//! record array goes in, out parameters come back as results.

use std::error::Error;
use std::rc::Rc;

use mlidl::binding::{build_binding, emit_sig_text, Level, Mode};
use mlidl::idl::compile_unit;
use mlidl::marshal::{self, Value};
use mlidl::wordmem::{word_fn, Addr, Convention, Machine};

const IDL: &str = r#"
sml_name ("Geo");

typedef struct { int x; int y; } POINT;

[sml_source ("geo.dll")]
interface Geo {
  int Perimeter ([in, size_is (n)] POINT *pts, [in] int n);
  void Split ([in] int v, [out] int *hi, [out] int *lo);
}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let unit = compile_unit(IDL, "geo.idl")?;
    let desc = Rc::new(build_binding(&unit, Mode::Dynamic, Level::Auto, None)?);
    print!("{}", emit_sig_text(&desc));

    let mut m = Machine::new();
    let lib = m.define_library("geo.dll");
    // Manhattan length of the closed polygon, read straight from memory.
    let perimeter = word_fn(|m, a| {
        let n = a[1] as usize;
        let w = m.read(Addr::new(a[0]), 2 * n)?;
        let pts: Vec<(i32, i32)> = w.chunks(2).map(|c| (c[0] as i32, c[1] as i32)).collect();
        let len: i32 = (0..n)
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % n]);
                (p.0 - q.0).abs() + (p.1 - q.1).abs()
            })
            .sum();
        Ok(len as u32)
    });
    let split = word_fn(|m, a| {
        m.store_word(Addr::new(a[1]), a[0] >> 16)?;
        m.store_word(Addr::new(a[2]), a[0] & 0xFFFF)?;
        Ok(0)
    });
    m.define_symbol(&lib, "Perimeter", Convention::Pascal, 2, perimeter);
    m.define_symbol(&lib, "Split", Convention::Pascal, 3, split);

    let geo = desc.interface("Geo").unwrap();
    let point = |x, y| Value::record([("x", Value::Int(x)), ("y", Value::Int(y))]);
    let square = Value::Array(vec![point(0, 0), point(3, 0), point(3, 3), point(0, 3)]);
    let f = m.get_function(&lib, "Perimeter")?;
    let out = marshal::call(
        &mut m,
        &desc,
        geo.method("Perimeter").unwrap(),
        f,
        &[square, Value::Int(4)],
    )?;
    println!("Perimeter -> {out:?}");

    let f = m.get_function(&lib, "Split")?;
    let out = marshal::call(
        &mut m,
        &desc,
        geo.method("Split").unwrap(),
        f,
        &[Value::Int(0x0005_000A)],
    )?;
    println!("Split 0x0005000A -> {out:?}");
    println!("live blocks after the calls: {}", m.live_allocations());
    Ok(())
}
