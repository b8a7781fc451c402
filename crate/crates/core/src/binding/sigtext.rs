//! Signature text in the layout of ML-IDL's generated signatures.
//!
//! Output is a pure function of the description: LF line endings, no
//! trailing blanks, two-space indentation steps, soft-wrapped at 72
//! columns. The header carries a content hash where a generator would
//! usually print the wall-clock time.

use sha2::{Digest, Sha256};

use super::desc::*;

const WIDTH: usize = 72;
const TOP: &str = "    ";
const INNER: &str = "      ";

pub fn emit_sig_text(desc: &BindingDesc) -> String {
    let mut out = Vec::new();
    let rule = "*".repeat(70);
    out.push(format!("({rule}"));
    out.push(" *".into());
    out.push(" *  This file was automatically generated by ml-idl".into());
    out.push(format!(" *  (content sha256:{})", content_hash(desc)));
    out.push(" *".into());
    out.push(format!(" {rule})"));
    out.push(String::new());
    out.push(format!("signature {}_SIG =", desc.module.to_uppercase()));
    out.push("  sig".into());
    for l in [
        "(*",
        " * Pervasives",
        " *)",
        "type 'a pointer",
        "val null : 'a pointer",
        "val free : 'a pointer -> unit",
    ] {
        out.push(format!("{TOP}{l}"));
    }

    let mut sections: Vec<Vec<String>> = Vec::new();
    let consts: Vec<String> = desc
        .consts
        .iter()
        .map(|c| format!("{TOP}val {} : {}", c.name, c.ty.display))
        .collect();
    sections.push(consts);
    sections.push(
        desc.aliases
            .iter()
            .map(|a| format!("{TOP}type {} = {}", a.name, a.ty.display))
            .collect(),
    );
    sections.push(desc.callbacks.iter().flat_map(callback_lines).collect());
    for r in &desc.records {
        sections.push(record_lines(r, desc.level));
    }
    for e in &desc.enums {
        sections.push(enum_lines(e));
    }
    for i in &desc.interfaces {
        sections.push(interface_lines(i, desc.mode));
    }
    for s in sections.into_iter().filter(|s| !s.is_empty()) {
        out.push(String::new());
        out.extend(s);
    }
    out.push(String::new());
    out.push("  end".into());

    let mut text = out.join("\n");
    text.push('\n');
    text
}

/// First 16 hex digits of the SHA-256 of the canonical sidecar text.
pub(crate) fn content_hash(desc: &BindingDesc) -> String {
    let digest = Sha256::digest(emit_binding_file(desc).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn tuple(items: &[String]) -> String {
    match items {
        [] => "unit".into(),
        [one] => one.clone(),
        many => format!("({})", many.join(" * ")),
    }
}

/// `lead(a * b * ...)tail`, breaking after ` *` and aligning continuation
/// lines one column past the opening parenthesis.
fn wrap_tuple(lead: &str, items: &[String], tail: &str) -> Vec<String> {
    let indent = " ".repeat(lead.len() + 1);
    let mut lines = Vec::new();
    let mut cur = format!("{lead}({}", items[0]);
    for (k, item) in items.iter().enumerate().skip(1) {
        let last = k + 1 == items.len();
        let closing = if last { 1 + tail.len() } else { 2 };
        if cur.len() + 3 + item.len() + closing > WIDTH && cur.len() > indent.len() {
            lines.push(format!("{cur} *"));
            cur = format!("{indent}{item}");
        } else {
            cur = format!("{cur} * {item}");
        }
    }
    lines.push(format!("{cur}){tail}"));
    lines
}

/// `lead DOM -> RNG`, wrapping whichever tuple is long.
fn arrow_lines(lead: &str, dom: &[String], rng: &[String]) -> Vec<String> {
    let one = format!("{lead}{} -> {}", tuple(dom), tuple(rng));
    if one.len() <= WIDTH {
        return vec![one];
    }
    if lead.contains(" -> ") {
        let curried = wrap_arrows(&one);
        if curried.iter().all(|l| l.len() <= WIDTH) {
            return curried;
        }
    }
    if dom.len() > 1 {
        return wrap_tuple(lead, dom, &format!(" -> {}", tuple(rng)));
    }
    if rng.len() > 1 {
        return wrap_tuple(&format!("{lead}{} -> ", tuple(dom)), rng, "");
    }
    wrap_arrows(&one)
}

/// Breaks a curried type after `->`, continuing under the text that
/// follows the first ` : `.
fn wrap_arrows(line: &str) -> Vec<String> {
    let Some(colon) = line.find(" : ") else {
        return vec![line.to_string()];
    };
    let indent = " ".repeat(colon + 3);
    let mut parts = line.split(" -> ");
    let mut lines = Vec::new();
    let mut cur = parts.next().unwrap_or_default().to_string();
    for part in parts {
        if cur.len() + 4 + part.len() > WIDTH && cur.len() > indent.len() {
            lines.push(format!("{cur} ->"));
            cur = format!("{indent}{part}");
        } else {
            cur = format!("{cur} -> {part}");
        }
    }
    lines.push(cur);
    lines
}

fn displays<'a>(ts: impl Iterator<Item = &'a TypeRef>) -> Vec<String> {
    ts.map(|t| t.display.clone()).collect()
}

fn callback_lines(c: &LiftedSig) -> Vec<String> {
    let dom = displays(c.in_params().map(|p| &p.ty));
    vec![format!("{TOP}type {} = ({} -> {})", c.name, tuple(&dom), c.ret.display)]
}

fn record_lines(r: &RecordLayout, level: Level) -> Vec<String> {
    let fields: Vec<String> = r
        .fields
        .iter()
        .map(|f| format!("{}:{}", f.name, f.ty.display))
        .collect();
    let lead = format!("{TOP}datatype {0} = {0} of {{", r.name);
    let one = format!("{lead}{}}}", fields.join(","));
    let mut lines = if one.len() <= WIDTH || fields.len() < 2 {
        vec![one]
    } else {
        let indent = " ".repeat(lead.len());
        let last = fields.len() - 1;
        fields
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let head = if k == 0 { lead.as_str() } else { indent.as_str() };
                let end = if k == last { "}" } else { "," };
                format!("{head}{f}{end}")
            })
            .collect()
    };
    if level == Level::Abstract {
        lines.push(format!("{TOP}structure {} : sig", r.name));
        lines.push(format!("{INNER}val make : {0} -> {0} pointer", r.name));
        lines.push(format!("{INNER}val get : {0} pointer -> {0}", r.name));
        lines.push(format!("{TOP}end"));
    }
    lines
}

fn enum_lines(e: &EnumMap) -> Vec<String> {
    let mut lines = Vec::new();
    match e.variants.split_first() {
        None => lines.push(format!("{TOP}type {}", e.name)),
        Some((first, rest)) => {
            let lead = format!("{TOP}datatype {} ", e.name);
            lines.push(format!("{lead}= {}", first.name));
            let bar = " ".repeat(lead.len());
            lines.extend(rest.iter().map(|v| format!("{bar}| {}", v.name)));
        }
    }
    lines.push(format!("{TOP}structure {} : sig", e.name));
    lines.push(format!("{INNER}val toInt : {} -> Int32.int", e.name));
    lines.push(format!("{INNER}val fromInt : Int32.int -> {} option", e.name));
    lines.push(format!("{TOP}end"));
    lines
}

/// Results a com-mode client sees: an HRESULT return is checked by the
/// call driver and never handed back.
pub(crate) fn com_results(m: &LiftedSig) -> Vec<&TypeRef> {
    m.results()
        .into_iter()
        .filter(|t| !(std::ptr::eq(*t, &m.ret) && t.display == "HRESULT"))
        .collect()
}

fn interface_lines(i: &InterfaceDesc, mode: Mode) -> Vec<String> {
    let mut lines = vec![format!("{TOP}structure {} : sig", i.name)];
    if mode == Mode::Com {
        lines.push(format!("{INNER}type {}", i.name));
        lines.push(format!("{INNER}val {0} : {0} Com.IID", i.name));
        lines.push(String::new());
    }
    for m in &i.methods {
        let dom = displays(m.in_params().map(|p| &p.ty));
        if mode == Mode::Com {
            let rng = displays(com_results(m).into_iter());
            let lead = format!("{INNER}val {} : {} Com.interface -> ", m.name, i.name);
            lines.extend(arrow_lines(&lead, &dom, &rng));
        } else {
            let rng = displays(m.results().into_iter());
            lines.extend(arrow_lines(&format!("{INNER}val {} : ", m.name), &dom, &rng));
        }
    }
    lines.push(format!("{TOP}end"));
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tuple_arity_rules() {
        assert_eq!(tuple(&[]), "unit");
        assert_eq!(tuple(&items(&["HWND"])), "HWND");
        assert_eq!(tuple(&items(&["HWND", "INT"])), "(HWND * INT)");
    }

    #[test]
    fn wrapping_respects_width_and_alignment() {
        let dom = items(&[
            "INT", "STRING", "STRING", "INT", "INT", "INT", "INT", "INT", "HWND", "HANDLE", "HANDLE", "LPVOID",
        ]);
        let lines = arrow_lines("      val CreateWindowExA : ", &dom, &items(&["HWND"]));
        assert!(lines.len() > 1);
        let col = lines[0].find('(').unwrap() + 1;
        for l in &lines {
            assert!(l.len() <= WIDTH, "{l}");
            assert!(!l.ends_with(' '));
        }
        for l in &lines[1..] {
            assert_eq!(l.len() - l.trim_start().len(), col);
        }
        assert!(lines.last().unwrap().ends_with(") -> HWND"));
        let rejoined: String = lines.iter().map(|l| l.trim()).collect::<Vec<_>>().join(" ");
        assert_eq!(rejoined, format!("val CreateWindowExA : {} -> HWND", tuple(&dom)));
    }

    #[test]
    fn curried_lines_break_at_arrows() {
        let lines = arrow_lines(
            "      val QueryInterface : IX Com.interface -> ",
            &items(&["'a Com.IID"]),
            &items(&["'a Com.interface"]),
        );
        assert_eq!(
            lines,
            [
                "      val QueryInterface : IX Com.interface -> 'a Com.IID ->",
                "                           'a Com.interface",
            ]
        );
    }

    #[test]
    fn empty_description_has_header_and_pervasives() {
        let desc = BindingDesc {
            module: "E".into(),
            mode: Mode::Static,
            level: Level::Auto,
            interfaces: vec![],
            enums: vec![],
            records: vec![],
            consts: vec![],
            callbacks: vec![],
            aliases: vec![],
        };
        let text = emit_sig_text(&desc);
        assert!(text.contains("automatically generated by ml-idl"));
        assert!(text.contains("signature E_SIG =\n  sig\n    (*\n     * Pervasives\n     *)\n"));
        assert!(text.ends_with("    val free : 'a pointer -> unit\n\n  end\n"));
        assert_eq!(text, emit_sig_text(&desc.clone()));
    }
}
