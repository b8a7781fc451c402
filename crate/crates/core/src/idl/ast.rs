//! Syntax tree for the IDL dialect.

use std::fmt;

/// Source position, 1-based.
///
/// Positions never take part in structural equality: two trees that differ
/// only in layout compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseType {
    Void,
    Int,
    Long,
    Short,
    Char,
    WChar,
    Boolean,
    UInt,
    ULong,
    UShort,
    UChar,
}

impl BaseType {
    pub fn c_name(self) -> &'static str {
        match self {
            BaseType::Void => "void",
            BaseType::Int => "int",
            BaseType::Long => "long",
            BaseType::Short => "short",
            BaseType::Char => "char",
            BaseType::WChar => "wchar_t",
            BaseType::Boolean => "boolean",
            BaseType::UInt => "unsigned int",
            BaseType::ULong => "unsigned long",
            BaseType::UShort => "unsigned short",
            BaseType::UChar => "unsigned char",
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, BaseType::Void | BaseType::Boolean)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdlType {
    Base(BaseType),
    Named(String),
    Ptr(Box<IdlType>),
    /// Pointer parameter carrying `size_is(len_param)`.
    Array {
        elem: Box<IdlType>,
        len_param: String,
    },
    /// Callback type; only legal as the body of a typedef.
    Func {
        params: Vec<ParamDecl>,
        ret: Box<IdlType>,
    },
}

impl IdlType {
    pub fn ptr_depth(&self) -> usize {
        match self {
            IdlType::Ptr(t) => 1 + t.ptr_depth(),
            _ => 0,
        }
    }

    /// The type under one level of indirection, if any.
    pub fn pointee(&self) -> Option<&IdlType> {
        match self {
            IdlType::Ptr(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    In,
    Out,
    InOut,
}

impl Dir {
    pub fn is_in(self) -> bool {
        matches!(self, Dir::In | Dir::InOut)
    }

    pub fn is_out(self) -> bool {
        matches!(self, Dir::Out | Dir::InOut)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub ty: IdlType,
    pub dir: Dir,
    pub by_ref: bool,
    pub string: bool,
    pub iid_is: Option<String>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Typedef {
    pub name: String,
    /// `[string]` on the typedef, e.g. `typedef [string] char *STRING`.
    pub string: bool,
    pub ty: IdlType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: IdlType,
    pub string: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub tag: Option<String>,
    pub fields: Vec<Field>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumVariant {
    pub name: String,
    pub value: u32,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumDecl {
    pub name: String,
    pub variants: Vec<EnumVariant>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Word(u32),
    Char(char),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub ty: IdlType,
    pub value: Literal,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpDecl {
    pub name: String,
    pub ret: IdlType,
    pub params: Vec<ParamDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    pub name: String,
    pub parent: Option<String>,
    pub sml_source: Option<String>,
    /// Type and constant declarations nested in the interface body.
    pub decls: Vec<Decl>,
    pub ops: Vec<OpDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    pub key: String,
    pub value: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Typedef(Typedef),
    Record(Record),
    Enum(EnumDecl),
    Const(ConstDecl),
    Interface(Interface),
    Annotation(Annotation),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Typedef(d) => &d.name,
            Decl::Record(d) => &d.name,
            Decl::Enum(d) => &d.name,
            Decl::Const(d) => &d.name,
            Decl::Interface(d) => &d.name,
            Decl::Annotation(d) => &d.key,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            Decl::Typedef(d) => d.pos,
            Decl::Record(d) => d.pos,
            Decl::Enum(d) => d.pos,
            Decl::Const(d) => d.pos,
            Decl::Interface(d) => d.pos,
            Decl::Annotation(d) => d.pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdlUnit {
    pub source_name: String,
    pub decls: Vec<Decl>,
}

impl IdlUnit {
    pub fn sml_name(&self) -> Option<&str> {
        self.decls.iter().find_map(|d| match d {
            Decl::Annotation(a) if a.key == "sml_name" => Some(a.value.as_str()),
            _ => None,
        })
    }

    pub fn interfaces(&self) -> impl Iterator<Item = &Interface> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Interface(i) => Some(i),
            _ => None,
        })
    }

    pub fn interface(&self, name: &str) -> Option<&Interface> {
        self.interfaces().find(|i| i.name == name)
    }

    /// Every non-interface declaration, including those nested in
    /// interface bodies, in source order.
    pub fn type_decls(&self) -> Vec<&Decl> {
        let mut out = Vec::new();
        for d in &self.decls {
            match d {
                Decl::Interface(i) => out.extend(i.decls.iter()),
                Decl::Annotation(_) => {}
                other => out.push(other),
            }
        }
        out
    }
}
