//! Canonical pretty-printer. Its output reparses to a structurally equal
//! unit.

use std::fmt::Write;

use super::ast::*;

pub fn print_unit(unit: &IdlUnit) -> String {
    let mut out = String::new();
    for d in &unit.decls {
        print_decl(&mut out, d, "");
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            '\r' => q.push_str("\\r"),
            '\0' => q.push_str("\\0"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

/// Splits a type into its base spelling and pointer stars.
fn spell(ty: &IdlType) -> (String, usize) {
    match ty {
        IdlType::Base(b) => (b.c_name().to_string(), 0),
        IdlType::Named(n) => (n.clone(), 0),
        IdlType::Ptr(t) => {
            let (base, stars) = spell(t);
            (base, stars + 1)
        }
        IdlType::Array { elem, .. } => {
            let (base, stars) = spell(elem);
            (base, stars + 1)
        }
        IdlType::Func { .. } => unreachable!("function types only occur in typedefs"),
    }
}

fn declarator(ty: &IdlType, name: &str) -> String {
    let (base, stars) = spell(ty);
    format!("{base} {}{name}", "*".repeat(stars))
}

fn param(p: &ParamDecl) -> String {
    let mut attrs = vec![match p.dir {
        Dir::In => "in".to_string(),
        Dir::Out => "out".to_string(),
        Dir::InOut => "in,out".to_string(),
    }];
    if p.by_ref {
        attrs.push("ref".into());
    }
    if p.string {
        attrs.push("string".into());
    }
    if let IdlType::Array { len_param, .. } = &p.ty {
        attrs.push(format!("size_is ({len_param})"));
    }
    if let Some(t) = &p.iid_is {
        attrs.push(format!("iid_is ({t})"));
    }
    format!("[{}] {}", attrs.join(","), declarator(&p.ty, &p.name))
}

fn params(ps: &[ParamDecl]) -> String {
    ps.iter().map(param).collect::<Vec<_>>().join(", ")
}

fn print_decl(out: &mut String, d: &Decl, ind: &str) {
    match d {
        Decl::Annotation(a) => {
            let _ = writeln!(out, "{ind}{} ({});", a.key, quote(&a.value));
        }
        Decl::Typedef(t) => {
            let attr = if t.string { "[string] " } else { "" };
            match &t.ty {
                IdlType::Func { params: ps, ret } => {
                    let (base, stars) = spell(ret);
                    let _ = writeln!(
                        out,
                        "{ind}typedef {attr}{base} {}*{} ({});",
                        "*".repeat(stars),
                        t.name,
                        params(ps)
                    );
                }
                ty => {
                    let _ = writeln!(out, "{ind}typedef {attr}{};", declarator(ty, &t.name));
                }
            }
        }
        Decl::Record(r) => {
            let tag = r.tag.as_ref().map(|t| format!("{t} ")).unwrap_or_default();
            let _ = writeln!(out, "{ind}typedef struct {tag}{{");
            for f in &r.fields {
                let attr = if f.string { "[string] " } else { "" };
                let _ = writeln!(out, "{ind}  {attr}{};", declarator(&f.ty, &f.name));
            }
            let _ = writeln!(out, "{ind}}} {};", r.name);
        }
        Decl::Enum(e) => {
            let _ = writeln!(out, "{ind}typedef enum {{");
            for v in &e.variants {
                let _ = writeln!(out, "{ind}  {} = 0wx{:X},", v.name, v.value);
            }
            let _ = writeln!(out, "{ind}}} {};", e.name);
        }
        Decl::Const(c) => {
            let value = match &c.value {
                Literal::Str(s) => quote(s),
                Literal::Int(n) => n.to_string(),
                Literal::Word(w) => format!("0wx{w:X}"),
                Literal::Char(ch) => {
                    let q = quote(&ch.to_string());
                    format!("'{}'", &q[1..q.len() - 1])
                }
            };
            let _ = writeln!(out, "{ind}const {} = {value};", declarator(&c.ty, &c.name));
        }
        Decl::Interface(i) => {
            if let Some(src) = &i.sml_source {
                let _ = writeln!(out, "{ind}[sml_source ({})]", quote(src));
            }
            let parent = i.parent.as_ref().map(|p| format!(" : {p}")).unwrap_or_default();
            let _ = writeln!(out, "{ind}interface {}{parent} {{", i.name);
            let inner = format!("{ind}  ");
            for nested in &i.decls {
                print_decl(out, nested, &inner);
            }
            for op in &i.ops {
                let _ = writeln!(
                    out,
                    "{inner}{} ({});",
                    declarator(&op.ret, &op.name),
                    params(&op.params)
                );
            }
            let _ = writeln!(out, "{ind}}};");
        }
    }
}
