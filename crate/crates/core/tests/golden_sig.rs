mod common;

use common::{golden_path, idl_path, read};
use mlidl::binding::{build_binding, emit_binding_file, emit_sig_text, load_binding_file, Level, Manifest, Mode};
use mlidl::idl::compile_unit;

fn sig(file: &str, mode: Mode, manifest: Option<&str>) -> String {
    let unit = compile_unit(&read(idl_path(file)), file).unwrap();
    let manifest = manifest.map(|m| Manifest::parse(&read(idl_path(m))).unwrap());
    emit_sig_text(&build_binding(&unit, mode, Level::Auto, manifest.as_ref()).unwrap())
}

#[test]
fn appendix_a_matches_golden() {
    assert_eq!(
        sig("appendix_a.idl", Mode::Dynamic, None),
        read(golden_path("appendix_a.sig"))
    );
}

#[test]
fn time_matches_golden() {
    let text = sig("time.idl", Mode::Dynamic, None);
    assert_eq!(text, read(golden_path("time.sig")));
    assert!(text.contains("val gettime : unit -> (timeval_t * timeval_t * timeval_t)"));
}

#[test]
fn win32_matches_golden() {
    assert_eq!(sig("win32.idl", Mode::Dynamic, None), read(golden_path("win32.sig")));
}

#[test]
fn bar_matches_golden() {
    assert_eq!(
        sig("bar.idl", Mode::Com, Some("bar.manifest")),
        read(golden_path("bar.sig"))
    );
}

#[test]
fn sidecar_regenerates_the_signature() {
    for file in ["appendix_a.idl", "time.idl", "win32.idl", "counter.idl"] {
        let unit = compile_unit(&read(idl_path(file)), file).unwrap();
        let manifest = (file == "counter.idl").then(|| Manifest::parse(&read(idl_path("counter.manifest"))).unwrap());
        let mode = if manifest.is_some() { Mode::Com } else { Mode::Dynamic };
        let desc = build_binding(&unit, mode, Level::Auto, manifest.as_ref()).unwrap();
        let back = load_binding_file(&emit_binding_file(&desc)).unwrap();
        assert_eq!(emit_sig_text(&back), emit_sig_text(&desc), "{file}");
    }
}
