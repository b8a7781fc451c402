//! Name and type resolution.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::IdlError;

/// Semantic class of a predeclared type name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinKind {
    Int32,
    Word32,
    OpaqueAddr,
    /// 128-bit interface or class identifier, passed by reference.
    Guid,
    WideString,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub kind: BuiltinKind,
}

const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "UINT",
        kind: BuiltinKind::Word32,
    },
    Builtin {
        name: "DWORD",
        kind: BuiltinKind::Word32,
    },
    Builtin {
        name: "ULONG",
        kind: BuiltinKind::Word32,
    },
    Builtin {
        name: "LONG",
        kind: BuiltinKind::Int32,
    },
    Builtin {
        name: "LCID",
        kind: BuiltinKind::Word32,
    },
    Builtin {
        name: "DISPID",
        kind: BuiltinKind::Int32,
    },
    Builtin {
        name: "HRESULT",
        kind: BuiltinKind::Int32,
    },
    Builtin {
        name: "LPVOID",
        kind: BuiltinKind::OpaqueAddr,
    },
    Builtin {
        name: "IID",
        kind: BuiltinKind::Guid,
    },
    Builtin {
        name: "CLSID",
        kind: BuiltinKind::Guid,
    },
    Builtin {
        name: "LPOLESTR",
        kind: BuiltinKind::WideString,
    },
];

/// Interfaces every unit may name without declaring, with the number of
/// vtable slots each occupies (inherited slots included).
pub const PREDECLARED_INTERFACES: &[(&str, Option<&str>, usize)] =
    &[("IUnknown", None, 3), ("IDispatch", Some("IUnknown"), 7)];

pub fn builtin(name: &str) -> Option<Builtin> {
    BUILTINS.iter().copied().find(|b| b.name == name)
}

#[derive(Clone, Copy, Debug)]
pub enum TypeEntry<'u> {
    Alias(&'u Typedef),
    Record(&'u Record),
    Enum(&'u EnumDecl),
    Interface(Option<&'u Interface>),
    Builtin(Builtin),
}

/// Type namespace of one unit. User declarations shadow builtins, so a
/// unit may typedef `HRESULT` itself or rely on the predeclared one.
pub struct Scope<'u> {
    entries: HashMap<&'u str, TypeEntry<'u>>,
}

impl<'u> Scope<'u> {
    pub fn new(unit: &'u IdlUnit) -> Self {
        let mut entries: HashMap<&'u str, TypeEntry<'u>> = HashMap::new();
        for b in BUILTINS {
            entries.insert(b.name, TypeEntry::Builtin(*b));
        }
        for (name, _, _) in PREDECLARED_INTERFACES {
            entries.insert(name, TypeEntry::Interface(None));
        }
        for d in unit.type_decls() {
            let entry = match d {
                Decl::Typedef(t) => TypeEntry::Alias(t),
                Decl::Record(r) => TypeEntry::Record(r),
                Decl::Enum(e) => TypeEntry::Enum(e),
                _ => continue,
            };
            entries.insert(d.name(), entry);
        }
        for i in unit.interfaces() {
            entries.insert(&i.name, TypeEntry::Interface(Some(i)));
        }
        Scope { entries }
    }

    pub fn get(&self, name: &str) -> Option<TypeEntry<'u>> {
        self.entries.get(name).copied()
    }

    /// Follows typedef chains down to something that is not an alias.
    pub fn strip_aliases<'a>(&'a self, ty: &'a IdlType) -> &'a IdlType
    where
        'u: 'a,
    {
        let mut cur = ty;
        let mut hops = 0;
        while let IdlType::Named(n) = cur {
            match self.get(n) {
                Some(TypeEntry::Alias(t)) if hops < 64 => {
                    cur = &t.ty;
                    hops += 1;
                }
                _ => break,
            }
        }
        cur
    }

    pub fn is_integer(&self, ty: &IdlType) -> bool {
        match self.strip_aliases(ty) {
            IdlType::Base(b) => b.is_integer(),
            IdlType::Named(n) => matches!(
                self.get(n),
                Some(TypeEntry::Builtin(Builtin {
                    kind: BuiltinKind::Int32 | BuiltinKind::Word32,
                    ..
                })) | Some(TypeEntry::Enum(_))
            ),
            _ => false,
        }
    }

    /// An IID value or a reference to one.
    pub fn is_iid(&self, ty: &IdlType) -> bool {
        let ty = self.strip_aliases(ty);
        let ty = match ty {
            IdlType::Ptr(inner) => self.strip_aliases(inner),
            other => other,
        };
        matches!(ty, IdlType::Named(n) if matches!(
            self.get(n),
            Some(TypeEntry::Builtin(Builtin { kind: BuiltinKind::Guid, .. }))
        ))
    }
}

pub fn resolve(unit: IdlUnit) -> Result<IdlUnit, IdlError> {
    {
        let scope = Scope::new(&unit);
        for d in unit.type_decls() {
            check_decl(&scope, d)?;
        }
        for i in unit.interfaces() {
            check_interface(&scope, i)?;
        }
        check_inheritance(&unit)?;
    }
    Ok(unit)
}

fn check_decl(scope: &Scope<'_>, d: &Decl) -> Result<(), IdlError> {
    match d {
        Decl::Typedef(t) => match &t.ty {
            IdlType::Func { params, ret } => {
                check_type(scope, ret, t.pos)?;
                check_params(scope, params)
            }
            ty => check_type(scope, ty, t.pos),
        },
        Decl::Record(r) => r.fields.iter().try_for_each(|f| check_type(scope, &f.ty, f.pos)),
        Decl::Const(c) => check_type(scope, &c.ty, c.pos),
        _ => Ok(()),
    }
}

fn check_interface(scope: &Scope<'_>, i: &Interface) -> Result<(), IdlError> {
    if let Some(parent) = &i.parent {
        if !matches!(scope.get(parent), Some(TypeEntry::Interface(_))) {
            return Err(IdlError::UnresolvedType {
                pos: i.pos,
                name: parent.clone(),
            });
        }
    }
    for op in &i.ops {
        check_type(scope, &op.ret, op.pos)?;
        check_params(scope, &op.params)?;
    }
    Ok(())
}

fn check_type(scope: &Scope<'_>, ty: &IdlType, pos: Pos) -> Result<(), IdlError> {
    match ty {
        IdlType::Base(_) => Ok(()),
        IdlType::Named(n) => {
            if scope.get(n).is_some() {
                Ok(())
            } else {
                Err(IdlError::UnresolvedType { pos, name: n.clone() })
            }
        }
        IdlType::Ptr(t) => check_type(scope, t, pos),
        IdlType::Array { elem, .. } => check_type(scope, elem, pos),
        IdlType::Func { .. } => Err(IdlError::Invalid {
            pos,
            msg: "function types may only appear as the body of a typedef".into(),
        }),
    }
}

fn bad_target(pos: Pos, attr: &str, target: &str, reason: &str) -> IdlError {
    IdlError::BadAttrTarget {
        pos,
        attr: attr.to_string(),
        target: target.to_string(),
        reason: reason.to_string(),
    }
}

fn check_params(scope: &Scope<'_>, params: &[ParamDecl]) -> Result<(), IdlError> {
    for (index, p) in params.iter().enumerate() {
        check_type(scope, &p.ty, p.pos)?;
        if let IdlType::Array { len_param, .. } = &p.ty {
            match params.iter().find(|q| &q.name == len_param) {
                None => {
                    return Err(bad_target(
                        p.pos,
                        "size_is",
                        len_param,
                        "is not a parameter of this operation",
                    ))
                }
                Some(q) if q.name == p.name => {
                    return Err(bad_target(p.pos, "size_is", len_param, "names the array itself"))
                }
                Some(q) if !scope.is_integer(&q.ty) || q.dir != Dir::In => {
                    return Err(bad_target(
                        p.pos,
                        "size_is",
                        len_param,
                        "is not an integer [in] parameter",
                    ))
                }
                Some(_) => {}
            }
        }
        if let Some(target) = &p.iid_is {
            match params[..index].iter().find(|q| &q.name == target) {
                None => return Err(bad_target(p.pos, "iid_is", target, "is not an earlier parameter")),
                Some(q) if !scope.is_iid(&q.ty) => {
                    return Err(bad_target(p.pos, "iid_is", target, "is not an IID parameter"))
                }
                Some(_) => {}
            }
        }
        if p.dir.is_out() && !matches!(p.ty, IdlType::Ptr(_) | IdlType::Array { .. }) {
            return Err(IdlError::Invalid {
                pos: p.pos,
                msg: format!("[out] parameter `{}` must be a pointer", p.name),
            });
        }
    }
    Ok(())
}

fn check_inheritance(unit: &IdlUnit) -> Result<(), IdlError> {
    let parents: HashMap<&str, &str> = unit
        .interfaces()
        .filter_map(|i| i.parent.as_deref().map(|p| (i.name.as_str(), p)))
        .collect();
    for i in unit.interfaces() {
        let mut seen = HashSet::new();
        let mut cur = i.name.as_str();
        while let Some(&p) = parents.get(cur) {
            if !seen.insert(cur) || p == i.name {
                return Err(IdlError::InheritanceCycle {
                    pos: i.pos,
                    name: i.name.clone(),
                });
            }
            cur = p;
        }
    }
    Ok(())
}
