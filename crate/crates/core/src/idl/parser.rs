//! Recursive-descent parser for the DCE/COM-derived IDL subset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::IdlError;

/// Attributes that only make sense for RPC distribution. They are rejected
/// instead of skipped so that a file written for MIDL fails loudly.
const RPC_ATTRS: &[&str] = &[
    "unique",
    "ptr",
    "context_handle",
    "endpoint",
    "version",
    "uuid",
    "idempotent",
    "broadcast",
    "maybe",
    "transmit_as",
    "handle",
    "implicit_handle",
    "auto_handle",
    "explicit_handle",
    "comm_status",
    "fault_status",
    "first_is",
    "last_is",
    "length_is",
    "max_is",
    "min_is",
    "switch_is",
    "switch_type",
    "callback",
    "local",
    "object",
    "pointer_default",
];

#[derive(Debug)]
enum Attr {
    In,
    Out,
    Ref,
    String,
    SizeIs(String),
    IidIs(String),
    SmlSource(String),
}

pub fn parse_unit(tokens: &[Token]) -> Result<IdlUnit, IdlError> {
    parse_unit_named(tokens, "<input>")
}

pub fn parse_unit_named(tokens: &[Token], source_name: &str) -> Result<IdlUnit, IdlError> {
    let mut p = Parser { toks: tokens, at: 0 };
    let mut decls = Vec::new();
    while !p.at_end() {
        decls.push(p.decl()?);
    }
    let unit = IdlUnit {
        source_name: source_name.to_string(),
        decls,
    };
    check_unique(&unit)?;
    Ok(unit)
}

struct Parser<'t> {
    toks: &'t [Token],
    at: usize,
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.at)
    }

    fn peek_at(&self, k: usize) -> Option<&'t Token> {
        self.toks.get(self.at + k)
    }

    fn pos(&self) -> Pos {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => Pos {
                line: t.line,
                col: t.col,
            },
            None => Pos { line: 1, col: 1 },
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.toks[self.at];
        self.at += 1;
        t
    }

    fn error(&self, expected: &[&str]) -> IdlError {
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        IdlError::Parse {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn unsupported(&self, msg: impl Into<String>) -> IdlError {
        IdlError::Unsupported {
            pos: self.pos(),
            msg: msg.into(),
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_punct(p)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), IdlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{p}`")]))
        }
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_keyword(k)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, IdlError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(self.bump().text.clone()),
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn string_lit(&mut self) -> Result<String, IdlError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::StringLiteral => Ok(self.bump().unquoted().unwrap_or_default()),
            _ => Err(self.error(&["string literal"])),
        }
    }

    fn reject_ellipsis(&self) -> Result<(), IdlError> {
        if self.peek().is_some_and(|t| t.is_punct("...")) {
            return Err(self.unsupported("elided `...` is not part of the dialect"));
        }
        Ok(())
    }

    fn decl(&mut self) -> Result<Decl, IdlError> {
        self.reject_ellipsis()?;
        let pos = self.pos();
        let Some(t) = self.peek() else {
            return Err(self.error(&["declaration"]));
        };
        if t.is_keyword("typedef") {
            self.bump();
            return self.typedef(pos);
        }
        if t.is_keyword("const") {
            self.bump();
            return self.const_decl(pos);
        }
        if t.is_keyword("interface") || t.is_punct("[") {
            return self.interface(pos);
        }
        if t.kind == TokenKind::Ident && self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
            let key = self.ident()?;
            if key != "sml_name" {
                return Err(IdlError::Unsupported {
                    pos,
                    msg: format!("unknown annotation `{key}`"),
                });
            }
            self.expect_punct("(")?;
            let value = self.string_lit()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Decl::Annotation(Annotation { key, value, pos }));
        }
        Err(self.error(&["`typedef`", "`const`", "`interface`", "`[`", "annotation"]))
    }

    fn attrs(&mut self) -> Result<Vec<(Attr, Pos)>, IdlError> {
        let mut out = Vec::new();
        if !self.eat_punct("[") {
            return Ok(out);
        }
        loop {
            let pos = self.pos();
            let name = self.ident().map_err(|_| self.error(&["attribute"]))?;
            let attr = match name.as_str() {
                "in" => Attr::In,
                "out" => Attr::Out,
                "ref" => Attr::Ref,
                "string" => Attr::String,
                "size_is" | "iid_is" => {
                    self.expect_punct("(")?;
                    let target = self.ident()?;
                    self.expect_punct(")")?;
                    if name == "size_is" {
                        Attr::SizeIs(target)
                    } else {
                        Attr::IidIs(target)
                    }
                }
                "sml_source" => {
                    self.expect_punct("(")?;
                    let lib = self.string_lit()?;
                    self.expect_punct(")")?;
                    Attr::SmlSource(lib)
                }
                rpc if RPC_ATTRS.contains(&rpc) => {
                    return Err(IdlError::Unsupported {
                        pos,
                        msg: format!("RPC attribute `{rpc}` is not supported by this dialect"),
                    })
                }
                other => {
                    return Err(IdlError::Unsupported {
                        pos,
                        msg: format!("unknown attribute `{other}`"),
                    })
                }
            };
            out.push((attr, pos));
            if self.eat_punct("]") {
                return Ok(out);
            }
            if !self.eat_punct(",") {
                return Err(self.error(&["`,`", "`]`"]));
            }
        }
    }

    /// Base keyword or named type, without pointers.
    fn type_spec(&mut self) -> Result<IdlType, IdlError> {
        let Some(t) = self.peek() else {
            return Err(self.error(&["type"]));
        };
        if t.kind == TokenKind::Ident {
            return Ok(IdlType::Named(self.bump().text.clone()));
        }
        if t.kind != TokenKind::Keyword {
            return Err(self.error(&["type"]));
        }
        let base = match t.text.as_str() {
            "void" => BaseType::Void,
            "int" => BaseType::Int,
            "long" => BaseType::Long,
            "short" => BaseType::Short,
            "char" => BaseType::Char,
            "wchar_t" => BaseType::WChar,
            "boolean" => BaseType::Boolean,
            "signed" => {
                self.bump();
                return match self.peek() {
                    Some(t)
                        if t.is_keyword("int")
                            || t.is_keyword("long")
                            || t.is_keyword("short")
                            || t.is_keyword("char") =>
                    {
                        self.type_spec()
                    }
                    _ => Ok(IdlType::Base(BaseType::Int)),
                };
            }
            "unsigned" => {
                self.bump();
                let base = if self.eat_keyword("long") {
                    BaseType::ULong
                } else if self.eat_keyword("short") {
                    BaseType::UShort
                } else if self.eat_keyword("char") {
                    BaseType::UChar
                } else {
                    self.eat_keyword("int");
                    BaseType::UInt
                };
                return Ok(IdlType::Base(base));
            }
            "float" | "double" => {
                return Err(self.unsupported(format!("floating-point type `{}` is not supported", t.text)))
            }
            _ => return Err(self.error(&["type"])),
        };
        self.bump();
        Ok(IdlType::Base(base))
    }

    fn stars(&mut self, mut ty: IdlType) -> Result<IdlType, IdlError> {
        while self.eat_punct("*") {
            ty = IdlType::Ptr(Box::new(ty));
        }
        if ty.ptr_depth() > 2 {
            return Err(self.unsupported("pointer depth above 2 is not supported"));
        }
        Ok(ty)
    }

    fn typedef(&mut self, pos: Pos) -> Result<Decl, IdlError> {
        let mut string = false;
        for (a, apos) in self.attrs()? {
            match a {
                Attr::String => string = true,
                other => {
                    return Err(IdlError::Unsupported {
                        pos: apos,
                        msg: format!("attribute `{}` is not allowed on a typedef", attr_name(&other)),
                    })
                }
            }
        }
        if self.eat_keyword("struct") {
            let tag = match self.peek() {
                Some(t) if t.kind == TokenKind::Ident => Some(self.ident()?),
                _ => None,
            };
            self.expect_punct("{")?;
            let mut fields = Vec::new();
            while !self.eat_punct("}") {
                fields.push(self.field()?);
            }
            let name = self.ident()?;
            self.expect_punct(";")?;
            return Ok(Decl::Record(Record { name, tag, fields, pos }));
        }
        if self.eat_keyword("enum") {
            if self.peek().is_some_and(|t| t.kind == TokenKind::Ident) {
                self.bump();
            }
            self.expect_punct("{")?;
            let variants = self.variants()?;
            let name = self.ident()?;
            self.expect_punct(";")?;
            return Ok(Decl::Enum(EnumDecl { name, variants, pos }));
        }
        let spec = self.type_spec()?;
        let ty = self.stars(spec.clone())?;
        let name = self.ident()?;
        if self.eat_punct("(") {
            let IdlType::Ptr(ret) = ty else {
                return Err(IdlError::Unsupported {
                    pos,
                    msg: format!("callback typedef `{name}` must be a function pointer"),
                });
            };
            let params = self.params()?;
            self.expect_punct(";")?;
            return Ok(Decl::Typedef(Typedef {
                name,
                string,
                ty: IdlType::Func { params, ret },
                pos,
            }));
        }
        self.expect_punct(";")?;
        Ok(Decl::Typedef(Typedef { name, string, ty, pos }))
    }

    fn field(&mut self) -> Result<Field, IdlError> {
        self.reject_ellipsis()?;
        let pos = self.pos();
        let mut string = false;
        for (a, apos) in self.attrs()? {
            match a {
                Attr::String => string = true,
                other => {
                    return Err(IdlError::Unsupported {
                        pos: apos,
                        msg: format!("attribute `{}` is not allowed on a field", attr_name(&other)),
                    })
                }
            }
        }
        let spec = self.type_spec()?;
        let ty = self.stars(spec)?;
        let name = self.ident()?;
        self.expect_punct(";")?;
        Ok(Field { name, ty, string, pos })
    }

    fn variants(&mut self) -> Result<Vec<EnumVariant>, IdlError> {
        let mut out: Vec<EnumVariant> = Vec::new();
        loop {
            self.reject_ellipsis()?;
            if self.eat_punct("}") {
                return Ok(out);
            }
            let pos = self.pos();
            let name = self.ident().map_err(|_| self.error(&["enum variant", "`}`"]))?;
            let value = if self.eat_punct("=") {
                self.enum_value()?
            } else {
                out.last().map_or(0, |v| v.value.wrapping_add(1))
            };
            out.push(EnumVariant { name, value, pos });
            if self.eat_punct("}") {
                return Ok(out);
            }
            if !self.eat_punct(",") {
                return Err(self.error(&["`,`", "`}`"]));
            }
        }
    }

    fn enum_value(&mut self) -> Result<u32, IdlError> {
        let pos = self.pos();
        let negative = self.eat_punct("-");
        let Some(t) = self.peek() else {
            return Err(self.error(&["integer literal", "word literal"]));
        };
        if !matches!(t.kind, TokenKind::IntLiteral | TokenKind::WordLiteral)
            || (negative && t.kind == TokenKind::WordLiteral)
        {
            return Err(self.error(&["integer literal", "word literal"]));
        }
        let n = self.bump().number().unwrap_or(u64::MAX);
        let too_big = || IdlError::Invalid {
            pos,
            msg: format!("enum value `{}` does not fit in 32 bits", t.text),
        };
        if negative {
            if n > 1 << 31 {
                return Err(too_big());
            }
            Ok((n as u32).wrapping_neg())
        } else {
            u32::try_from(n).map_err(|_| too_big())
        }
    }

    fn const_decl(&mut self, pos: Pos) -> Result<Decl, IdlError> {
        let spec = self.type_spec()?;
        let ty = self.stars(spec)?;
        let name = self.ident()?;
        self.expect_punct("=")?;
        let negative = self.eat_punct("-");
        let Some(t) = self.peek() else {
            return Err(self.error(&["literal"]));
        };
        let value = match t.kind {
            TokenKind::StringLiteral if !negative => Literal::Str(t.unquoted().unwrap_or_default()),
            TokenKind::CharLiteral if !negative => {
                Literal::Char(t.unquoted().and_then(|s| s.chars().next()).unwrap_or('\0'))
            }
            TokenKind::WordLiteral if !negative => Literal::Word(t.number().unwrap_or(0) as u32),
            TokenKind::IntLiteral => {
                let n = t.number().ok_or_else(|| self.error(&["integer literal"]))? as i64;
                Literal::Int(if negative { -n } else { n })
            }
            _ => return Err(self.error(&["literal"])),
        };
        self.bump();
        self.expect_punct(";")?;
        Ok(Decl::Const(ConstDecl { name, ty, value, pos }))
    }

    fn interface(&mut self, pos: Pos) -> Result<Decl, IdlError> {
        let mut sml_source = None;
        for (a, apos) in self.attrs()? {
            match a {
                Attr::SmlSource(lib) => sml_source = Some(lib),
                other => {
                    return Err(IdlError::Unsupported {
                        pos: apos,
                        msg: format!("attribute `{}` is not allowed on an interface", attr_name(&other)),
                    })
                }
            }
        }
        if !self.eat_keyword("interface") {
            return Err(self.error(&["`interface`"]));
        }
        let name = self.ident()?;
        let parent = if self.eat_punct(":") { Some(self.ident()?) } else { None };
        self.expect_punct("{")?;
        let mut decls = Vec::new();
        let mut ops = Vec::new();
        loop {
            self.reject_ellipsis()?;
            if self.eat_punct("}") {
                break;
            }
            let ipos = self.pos();
            if self.eat_keyword("typedef") {
                decls.push(self.typedef(ipos)?);
            } else if self.eat_keyword("const") {
                decls.push(self.const_decl(ipos)?);
            } else if self.at_end() {
                return Err(self.error(&["`}`"]));
            } else {
                ops.push(self.op()?);
            }
        }
        self.eat_punct(";");
        Ok(Decl::Interface(Interface {
            name,
            parent,
            sml_source,
            decls,
            ops,
            pos,
        }))
    }

    fn op(&mut self) -> Result<OpDecl, IdlError> {
        let pos = self.pos();
        let spec = self.type_spec()?;
        let ret = self.stars(spec)?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let params = self.params()?;
        self.expect_punct(";")?;
        Ok(OpDecl { name, ret, params, pos })
    }

    /// Parameter list after the opening parenthesis, through `)`.
    fn params(&mut self) -> Result<Vec<ParamDecl>, IdlError> {
        if self.eat_punct(")") {
            return Ok(Vec::new());
        }
        if self.peek().is_some_and(|t| t.is_keyword("void")) && self.peek_at(1).is_some_and(|t| t.is_punct(")")) {
            self.at += 2;
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        loop {
            out.push(self.param()?);
            if self.eat_punct(")") {
                return Ok(out);
            }
            if !self.eat_punct(",") {
                return Err(self.error(&["`,`", "`)`"]));
            }
        }
    }

    fn param(&mut self) -> Result<ParamDecl, IdlError> {
        let pos = self.pos();
        let (mut is_in, mut is_out, mut by_ref, mut string) = (false, false, false, false);
        let (mut size_is, mut iid_is) = (None, None);
        for (a, apos) in self.attrs()? {
            match a {
                Attr::In => is_in = true,
                Attr::Out => is_out = true,
                Attr::Ref => by_ref = true,
                Attr::String => string = true,
                Attr::SizeIs(t) => size_is = Some(t),
                Attr::IidIs(t) => iid_is = Some(t),
                Attr::SmlSource(_) => {
                    return Err(IdlError::Unsupported {
                        pos: apos,
                        msg: "attribute `sml_source` is not allowed on a parameter".into(),
                    })
                }
            }
        }
        self.eat_keyword("const");
        let spec = self.type_spec()?;
        let mut ty = self.stars(spec)?;
        if self.eat_punct("&") {
            ty = IdlType::Ptr(Box::new(ty));
            by_ref = true;
        }
        let name = self.ident()?;
        if let Some(len_param) = size_is {
            let IdlType::Ptr(elem) = ty else {
                return Err(IdlError::Unsupported {
                    pos,
                    msg: format!("`size_is` on `{name}` requires a pointer parameter"),
                });
            };
            ty = IdlType::Array { elem, len_param };
        }
        let dir = match (is_in, is_out) {
            (_, false) => Dir::In,
            (false, true) => Dir::Out,
            (true, true) => Dir::InOut,
        };
        Ok(ParamDecl {
            name,
            ty,
            dir,
            by_ref,
            string,
            iid_is,
            pos,
        })
    }
}

fn attr_name(a: &Attr) -> &'static str {
    match a {
        Attr::In => "in",
        Attr::Out => "out",
        Attr::Ref => "ref",
        Attr::String => "string",
        Attr::SizeIs(_) => "size_is",
        Attr::IidIs(_) => "iid_is",
        Attr::SmlSource(_) => "sml_source",
    }
}

fn dup(pos: Pos, name: &str, namespace: &'static str) -> IdlError {
    IdlError::Duplicate {
        pos,
        name: name.to_string(),
        namespace,
    }
}

/// Names are unique per namespace: types, values (constants and enum
/// variants), operations per interface, parameters per operation, fields
/// per record.
fn check_unique(unit: &IdlUnit) -> Result<(), IdlError> {
    let mut types = HashSet::new();
    let mut values = HashSet::new();
    let mut annotations = 0;

    fn check_params(params: &[ParamDecl]) -> Result<(), IdlError> {
        let mut seen = HashSet::new();
        for p in params {
            if !seen.insert(p.name.as_str()) {
                return Err(dup(p.pos, &p.name, "parameter"));
            }
        }
        Ok(())
    }

    let mut visit = |d: &Decl| -> Result<(), IdlError> {
        match d {
            Decl::Annotation(a) => {
                annotations += 1;
                if annotations > 1 {
                    return Err(dup(a.pos, &a.key, "annotation"));
                }
            }
            Decl::Const(c) => {
                if !values.insert(c.name.clone()) {
                    return Err(dup(c.pos, &c.name, "value"));
                }
            }
            Decl::Enum(e) => {
                if !types.insert(e.name.clone()) {
                    return Err(dup(e.pos, &e.name, "type"));
                }
                for v in &e.variants {
                    if !values.insert(v.name.clone()) {
                        return Err(dup(v.pos, &v.name, "value"));
                    }
                }
            }
            Decl::Record(r) => {
                if !types.insert(r.name.clone()) {
                    return Err(dup(r.pos, &r.name, "type"));
                }
                let mut seen = HashSet::new();
                for f in &r.fields {
                    if !seen.insert(f.name.as_str()) {
                        return Err(dup(f.pos, &f.name, "field"));
                    }
                }
            }
            Decl::Typedef(t) => {
                if !types.insert(t.name.clone()) {
                    return Err(dup(t.pos, &t.name, "type"));
                }
                if let IdlType::Func { params, .. } = &t.ty {
                    check_params(params)?;
                }
            }
            Decl::Interface(i) => {
                if !types.insert(i.name.clone()) {
                    return Err(dup(i.pos, &i.name, "type"));
                }
                let mut ops = HashSet::new();
                for op in &i.ops {
                    if !ops.insert(op.name.as_str()) {
                        return Err(dup(op.pos, &op.name, "operation"));
                    }
                    check_params(&op.params)?;
                }
            }
        }
        Ok(())
    };

    for d in &unit.decls {
        visit(d)?;
        if let Decl::Interface(i) = d {
            for nested in &i.decls {
                visit(nested)?;
            }
        }
    }
    Ok(())
}
