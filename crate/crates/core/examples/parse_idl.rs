//! Parses an IDL file and lists what it declares.
//!
//! ```text
//! cargo run --example parse_idl -- idl/appendix_a.idl
//! ```

use std::{env, fs, process};

use mlidl::idl::{compile_unit, print_unit};

fn main() {
    let path = env::args().nth(1).unwrap_or_else(|| "idl/appendix_a.idl".into());
    let text = fs::read_to_string(&path).unwrap_or_else(|e| {
        eprintln!("{path}: {e}");
        process::exit(2);
    });
    let unit = compile_unit(&text, &path).unwrap_or_else(|e| {
        eprintln!("{}", e.diagnostic(&path));
        process::exit(2);
    });
    if let Some(name) = unit.sml_name() {
        println!("module {name}");
    }
    for i in unit.interfaces() {
        let source = i
            .sml_source
            .as_deref()
            .map(|s| format!(" from {s}"))
            .unwrap_or_default();
        println!("interface {}{source}", i.name);
        for op in &i.ops {
            println!("  {} ({} parameter(s))", op.name, op.params.len());
        }
    }
    // The printer's output parses back to the same unit.
    let again = compile_unit(&print_unit(&unit), &path).expect("printed unit parses");
    assert_eq!(again.interfaces().count(), unit.interfaces().count());
}
