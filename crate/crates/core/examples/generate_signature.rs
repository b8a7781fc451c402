//! Compiles an IDL file and prints its signature text and binding sidecar.
//!
//! ```text
//! cargo run --example generate_signature -- idl/appendix_a.idl
//! cargo run --example generate_signature -- idl/bar.idl com idl/bar.manifest
//! ```

use std::{env, fs, process};

use mlidl::binding::{build_binding, emit_binding_file, emit_sig_text, Level, Manifest, Mode};
use mlidl::idl::compile_unit;

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or("idl/time.idl");
    let mode = match args.get(1).map(String::as_str) {
        Some("static") => Mode::Static,
        Some("com") => Mode::Com,
        _ => Mode::Dynamic,
    };
    let text = fs::read_to_string(path).unwrap_or_else(|e| {
        eprintln!("{path}: {e}");
        process::exit(2);
    });
    let unit = compile_unit(&text, path).unwrap_or_else(|e| {
        eprintln!("{}", e.diagnostic(path));
        process::exit(2);
    });
    let manifest = args
        .get(2)
        .map(|m| Manifest::parse(&fs::read_to_string(m).expect("readable manifest")).expect("valid manifest"));
    let desc = build_binding(&unit, mode, Level::Auto, manifest.as_ref()).unwrap_or_else(|e| {
        eprintln!("{path}: {e}");
        process::exit(2);
    });
    print!("{}", emit_sig_text(&desc));
    if env::var_os("SHOW_BINDING").is_some() {
        print!("{}", emit_binding_file(&desc));
    }
}
