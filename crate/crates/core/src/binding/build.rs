//! Lowering a resolved unit to a [`BindingDesc`].

use std::collections::{BTreeMap, HashMap};

use super::desc::*;
use super::manifest::Manifest;
use super::BindingError;
use crate::idl::{
    BaseType, BuiltinKind, ConstDecl, Decl, Dir, IdlType, IdlUnit, Interface, Literal, OpDecl, ParamDecl, Record,
    Scope, TypeEntry, PREDECLARED_INTERFACES,
};

/// Names of the three IUnknown methods; never lifted into client signatures.
const IUNKNOWN_METHODS: [&str; 3] = ["QueryInterface", "AddRef", "Release"];

pub fn build_binding(
    unit: &IdlUnit,
    mode: Mode,
    level: Level,
    manifest: Option<&Manifest>,
) -> Result<BindingDesc, BindingError> {
    let scope = Scope::new(unit);
    let cx = Lower { scope: &scope, level };

    let mut aliases = Vec::new();
    let mut callbacks = Vec::new();
    let mut enums = Vec::new();
    let mut consts = Vec::new();
    let mut record_decls = Vec::new();
    for d in unit.type_decls() {
        match d {
            Decl::Typedef(t) => match &t.ty {
                IdlType::Func { params, ret } => callbacks.push(cx.callback(&t.name, params, ret)?),
                ty => aliases.push(AliasDesc {
                    name: t.name.clone(),
                    ty: TypeRef::new(cx.display(ty, t.string, false), cx.named_sem(&t.name)?),
                }),
            },
            Decl::Record(r) => record_decls.push(r),
            Decl::Enum(e) => enums.push(EnumMap {
                name: e.name.clone(),
                variants: e
                    .variants
                    .iter()
                    .map(|v| EnumVariantDesc {
                        name: v.name.clone(),
                        value: v.value,
                    })
                    .collect(),
            }),
            Decl::Const(c) => consts.push(cx.constant(c)?),
            _ => {}
        }
    }
    let records = cx.layouts(&record_decls)?;

    let mut interfaces = Vec::new();
    for i in unit.interfaces() {
        interfaces.push(match mode {
            Mode::Com => cx.com_interface(unit, i, manifest)?,
            Mode::Static | Mode::Dynamic => InterfaceDesc {
                name: i.name.clone(),
                source: i.sml_source.clone(),
                parent: i.parent.clone(),
                iid: None,
                methods: i.ops.iter().map(|op| cx.op(op, None)).collect::<Result<_, _>>()?,
            },
        });
    }
    if mode == Mode::Com {
        if let Some(m) = manifest {
            for (class, guid) in &m.clsids {
                consts.push(ConstDesc {
                    name: format!("{class}CLSID"),
                    ty: TypeRef::new("Com.CLSID", SemType::OpaqueAddr),
                    value: ConstValue::Guid(guid.to_string()),
                });
            }
        }
    }

    Ok(BindingDesc {
        module: module_name(unit),
        mode,
        level,
        interfaces,
        enums,
        records,
        consts,
        callbacks,
        aliases,
    })
}

/// `sml_name` if given, else the only interface's name, else the file stem.
pub fn module_name(unit: &IdlUnit) -> String {
    if let Some(n) = unit.sml_name() {
        return n.to_string();
    }
    let mut ifaces = unit.interfaces();
    if let (Some(i), None) = (ifaces.next(), ifaces.next()) {
        return i.name.clone();
    }
    let file = unit.source_name.rsplit(['/', '\\']).next().unwrap_or("");
    let stem = file.split('.').next().unwrap_or("");
    if stem.is_empty() {
        "Unit".into()
    } else {
        stem.to_string()
    }
}

struct Lower<'a, 'u> {
    scope: &'a Scope<'u>,
    level: Level,
}

fn base_sem(b: BaseType) -> SemType {
    match b {
        BaseType::Void => SemType::Unit,
        BaseType::Boolean => SemType::Bool,
        BaseType::UInt | BaseType::ULong | BaseType::UShort | BaseType::UChar => SemType::Word32,
        BaseType::Int | BaseType::Long | BaseType::Short | BaseType::Char | BaseType::WChar => SemType::Int32,
    }
}

fn base_display(b: BaseType) -> &'static str {
    match base_sem(b) {
        SemType::Unit => "unit",
        SemType::Bool => "Bool.bool",
        SemType::Word32 => "Word32.word",
        _ => "Int32.int",
    }
}

fn string_sem(elem: &IdlType) -> Option<SemType> {
    match elem {
        IdlType::Base(BaseType::Char | BaseType::UChar) => Some(SemType::String8),
        IdlType::Base(BaseType::WChar | BaseType::UShort) => Some(SemType::String16),
        _ => None,
    }
}

impl Lower<'_, '_> {
    fn unknown(&self, name: &str) -> BindingError {
        BindingError::UnknownType(name.to_string())
    }

    fn named_sem(&self, name: &str) -> Result<SemType, BindingError> {
        Ok(match self.scope.get(name).ok_or_else(|| self.unknown(name))? {
            TypeEntry::Alias(_) if name == "HANDLE" => SemType::Handle,
            TypeEntry::Alias(t) => match &t.ty {
                IdlType::Func { .. } => SemType::Callback { name: name.into() },
                ty => self.value_sem(ty, t.string)?,
            },
            TypeEntry::Record(_) => SemType::Record { name: name.into() },
            TypeEntry::Enum(_) => SemType::Enum { name: name.into() },
            TypeEntry::Interface(_) => SemType::OpaqueAddr,
            TypeEntry::Builtin(b) => match b.kind {
                BuiltinKind::Int32 => SemType::Int32,
                BuiltinKind::Word32 => SemType::Word32,
                BuiltinKind::OpaqueAddr | BuiltinKind::Guid => SemType::OpaqueAddr,
                BuiltinKind::WideString => SemType::String16,
            },
        })
    }

    /// Meaning of a value of type `ty` held in one slot (field, argument
    /// word, or return value).
    fn value_sem(&self, ty: &IdlType, string: bool) -> Result<SemType, BindingError> {
        match ty {
            IdlType::Base(b) => Ok(base_sem(*b)),
            IdlType::Named(n) => self.named_sem(n),
            IdlType::Ptr(inner) => Ok(match string_sem(inner) {
                Some(s) if string => s,
                _ => SemType::OpaqueAddr,
            }),
            IdlType::Array { elem, len_param } => Ok(SemType::Array {
                elem: Box::new(self.value_sem(elem, string)?),
                len_from: len_param.clone(),
            }),
            IdlType::Func { .. } => Err(BindingError::Unsupported {
                what: "anonymous function type".into(),
            }),
        }
    }

    fn record_name(&self, ty: &IdlType) -> Option<String> {
        match self.scope.strip_aliases(ty) {
            IdlType::Named(n) => match self.scope.get(n) {
                Some(TypeEntry::Record(r)) => Some(r.name.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn display(&self, ty: &IdlType, string: bool, by_ref: bool) -> String {
        match ty {
            IdlType::Base(b) => base_display(*b).into(),
            IdlType::Named(n) => n.clone(),
            IdlType::Ptr(inner) => {
                if string && string_sem(inner).is_some() {
                    "String.string".into()
                } else if by_ref || self.record_name(inner).is_some() {
                    self.display(inner, false, false)
                } else {
                    "Word32.word".into()
                }
            }
            IdlType::Array { elem, .. } => format!("{} list", self.display(elem, string, false)),
            IdlType::Func { .. } => "Word32.word".into(),
        }
    }

    /// Record and array arguments become opaque pointers at the abstract level.
    fn level_ref(&self, t: TypeRef) -> TypeRef {
        if self.level == Level::Auto {
            return t;
        }
        match &t.sem {
            SemType::Record { name } => TypeRef::new(format!("{name} pointer"), t.sem.clone()),
            SemType::Array { .. } => {
                let elem = t.display.strip_suffix(" list").unwrap_or(&t.display);
                TypeRef::new(format!("{elem} pointer"), t.sem.clone())
            }
            _ => t,
        }
    }

    fn param(&self, p: &ParamDecl, in_callback: bool) -> Result<AbiParam, BindingError> {
        let dir = match p.dir {
            Dir::In => ParamDir::In,
            Dir::Out => ParamDir::Out,
            Dir::InOut => ParamDir::InOut,
        };
        if in_callback && dir.is_out() {
            return Err(BindingError::Unsupported {
                what: format!("out parameter `{}` in a callback type", p.name),
            });
        }
        let (ty, by_ref) = if dir.is_out() {
            match &p.ty {
                IdlType::Ptr(inner) => {
                    let sem = self.value_sem(inner, p.string)?;
                    if let SemType::Callback { name } = &sem {
                        return Err(BindingError::Unsupported {
                            what: format!("out parameter `{}` of callback type `{name}`", p.name),
                        });
                    }
                    (TypeRef::new(self.display(inner, p.string, false), sem), p.by_ref)
                }
                arr @ IdlType::Array { .. } => (
                    TypeRef::new(self.display(arr, p.string, false), self.value_sem(arr, p.string)?),
                    p.by_ref,
                ),
                _ => {
                    return Err(BindingError::Invalid(format!(
                        "out parameter `{}` is not a pointer",
                        p.name
                    )));
                }
            }
        } else {
            match (&p.ty, p.ty.pointee().and_then(|t| self.record_name(t))) {
                (IdlType::Ptr(inner), Some(rec)) => (
                    TypeRef::new(self.display(inner, false, true), SemType::Record { name: rec }),
                    true,
                ),
                (ty, _) => (
                    TypeRef::new(self.display(ty, p.string, p.by_ref), self.value_sem(ty, p.string)?),
                    false,
                ),
            }
        };
        Ok(AbiParam {
            name: p.name.clone(),
            dir,
            ty: if in_callback { ty } else { self.level_ref(ty) },
            by_ref,
        })
    }

    fn ret(&self, ret: &IdlType) -> Result<TypeRef, BindingError> {
        let sem = self.value_sem(ret, false)?;
        Ok(TypeRef::new(self.display(ret, false, false), sem))
    }

    fn op(&self, op: &OpDecl, slot: Option<u32>) -> Result<LiftedSig, BindingError> {
        Ok(LiftedSig {
            name: op.name.clone(),
            params: op
                .params
                .iter()
                .map(|p| self.param(p, false))
                .collect::<Result<_, _>>()?,
            ret: self.ret(&op.ret)?,
            slot,
        })
    }

    fn callback(&self, name: &str, params: &[ParamDecl], ret: &IdlType) -> Result<LiftedSig, BindingError> {
        Ok(LiftedSig {
            name: name.to_string(),
            params: params.iter().map(|p| self.param(p, true)).collect::<Result<_, _>>()?,
            ret: self.ret(ret)?,
            slot: None,
        })
    }

    fn constant(&self, c: &ConstDecl) -> Result<ConstDesc, BindingError> {
        let (ty, value) = match &c.value {
            Literal::Str(s) => {
                let sem = match c.ty.pointee().and_then(string_sem) {
                    Some(sem) => sem,
                    None => match self.value_sem(&c.ty, true)? {
                        sem @ (SemType::String8 | SemType::String16) => sem,
                        _ => {
                            return Err(BindingError::Invalid(format!(
                                "string constant `{}` has a non-string type",
                                c.name
                            )))
                        }
                    },
                };
                (TypeRef::new("String.string", sem), ConstValue::String(s.clone()))
            }
            Literal::Int(n) => (self.ret(&c.ty)?, ConstValue::Int(*n)),
            Literal::Char(ch) => (self.ret(&c.ty)?, ConstValue::Int(*ch as i64)),
            Literal::Word(w) => (self.ret(&c.ty)?, ConstValue::Word(*w)),
        };
        Ok(ConstDesc {
            name: c.name.clone(),
            ty,
            value,
        })
    }

    fn layouts(&self, decls: &[&Record]) -> Result<Vec<RecordLayout>, BindingError> {
        let by_name: HashMap<&str, &Record> = decls.iter().map(|r| (r.name.as_str(), *r)).collect();
        let mut sizes: BTreeMap<String, u32> = BTreeMap::new();
        let mut out = Vec::new();
        for r in decls {
            let mut visiting = Vec::new();
            let fields = self.fields(r, &by_name, &mut sizes, &mut visiting)?;
            let size = sizes[&r.name];
            out.push(RecordLayout {
                name: r.name.clone(),
                fields,
                size,
            });
        }
        Ok(out)
    }

    fn fields(
        &self,
        r: &Record,
        by_name: &HashMap<&str, &Record>,
        sizes: &mut BTreeMap<String, u32>,
        visiting: &mut Vec<String>,
    ) -> Result<Vec<FieldLayout>, BindingError> {
        if visiting.contains(&r.name) {
            return Err(BindingError::Invalid(format!("record `{}` contains itself", r.name)));
        }
        visiting.push(r.name.clone());
        let mut fields = Vec::new();
        let mut offset = 0;
        for f in &r.fields {
            let sem = self.value_sem(&f.ty, f.string)?;
            let size = match &sem {
                SemType::Record { name } => match sizes.get(name) {
                    Some(s) => *s,
                    None => {
                        let inner = by_name.get(name.as_str()).ok_or_else(|| self.unknown(name))?;
                        self.fields(inner, by_name, sizes, visiting)?;
                        sizes[name]
                    }
                },
                SemType::Unit => return Err(BindingError::Invalid(format!("field `{}` has type void", f.name))),
                _ => 1,
            };
            fields.push(FieldLayout {
                name: f.name.clone(),
                ty: TypeRef::new(self.display(&f.ty, f.string, false), sem),
                offset,
            });
            offset += size;
        }
        visiting.pop();
        sizes.insert(r.name.clone(), offset);
        Ok(fields)
    }

    /// Vtable slots taken by `name` and everything it inherits.
    fn slot_count(&self, unit: &IdlUnit, name: &str) -> u32 {
        if let Some((_, _, n)) = PREDECLARED_INTERFACES.iter().find(|(n, _, _)| *n == name) {
            if unit.interface(name).is_none() {
                return *n as u32;
            }
        }
        match unit.interface(name) {
            Some(i) => self.inherited_slots(unit, i) + client_ops(i).count() as u32,
            None => 3,
        }
    }

    fn inherited_slots(&self, unit: &IdlUnit, i: &Interface) -> u32 {
        match &i.parent {
            Some(p) => self.slot_count(unit, p),
            None => 3,
        }
    }

    /// Methods callable through `i`, inherited ones first, with their slots.
    fn vtable_methods(&self, unit: &IdlUnit, i: &Interface) -> Result<Vec<LiftedSig>, BindingError> {
        let mut methods = match i.parent.as_deref().and_then(|p| unit.interface(p)) {
            Some(parent) => self.vtable_methods(unit, parent)?,
            None => Vec::new(),
        };
        let base = self.inherited_slots(unit, i);
        for (k, op) in client_ops(i).enumerate() {
            methods.push(self.op(op, Some(base + k as u32))?);
        }
        Ok(methods)
    }

    fn com_interface(
        &self,
        unit: &IdlUnit,
        i: &Interface,
        manifest: Option<&Manifest>,
    ) -> Result<InterfaceDesc, BindingError> {
        let iid = manifest
            .and_then(|m| m.iids.get(&i.name))
            .ok_or_else(|| BindingError::MissingIid {
                interface: i.name.clone(),
            })?;
        let query = LiftedSig {
            name: "QueryInterface".into(),
            params: vec![
                AbiParam {
                    name: "iid".into(),
                    dir: ParamDir::In,
                    ty: TypeRef::new("'a Com.IID", SemType::OpaqueAddr),
                    by_ref: false,
                },
                AbiParam {
                    name: "ppv".into(),
                    dir: ParamDir::Out,
                    ty: TypeRef::new("'a Com.interface", SemType::OpaqueAddr),
                    by_ref: false,
                },
            ],
            ret: TypeRef::new("HRESULT", SemType::Int32),
            slot: Some(0),
        };
        let mut methods = vec![query];
        methods.extend(self.vtable_methods(unit, i)?);
        Ok(InterfaceDesc {
            name: i.name.clone(),
            source: i.sml_source.clone(),
            parent: Some(i.parent.clone().unwrap_or_else(|| "IUnknown".into())),
            iid: Some(iid.to_string()),
            methods,
        })
    }
}

fn client_ops(i: &Interface) -> impl Iterator<Item = &OpDecl> {
    i.ops.iter().filter(|op| !IUNKNOWN_METHODS.contains(&op.name.as_str()))
}
