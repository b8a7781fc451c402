//! Class factories and the class registry.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use super::object::{query_interface, Clsid, Com, ComError, Iid, InterfaceRef, ObjectId};
use super::Guid;
use crate::wordmem::Machine;

/// Builds a fresh object with a count of 0.
pub type BuildFn = Rc<dyn Fn(&mut Machine, &Com) -> Result<ObjectId, ComError>>;

#[derive(Clone)]
pub struct ClassFactory {
    clsid: Clsid,
    name: String,
    build: BuildFn,
}

impl fmt::Debug for ClassFactory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassFactory({} {})", self.clsid, self.name)
    }
}

impl ClassFactory {
    pub fn new<F>(name: impl Into<String>, clsid: Clsid, build: F) -> Self
    where
        F: Fn(&mut Machine, &Com) -> Result<ObjectId, ComError> + 'static,
    {
        ClassFactory {
            clsid,
            name: name.into(),
            build: Rc::new(build),
        }
    }

    pub fn clsid(&self) -> Clsid {
        self.clsid
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Builds an object and asks it for `iid`. On any failure every
    /// object built during the attempt is destroyed.
    pub fn create(&self, m: &mut Machine, com: &Com, iid: &Iid) -> Result<InterfaceRef, ComError> {
        let mark = com.next_id();
        let attempt = (self.build)(m, com).and_then(|id| {
            let unk = com.identity(id).ok_or(ComError::DeadObject(Default::default()))?;
            query_interface(m, &unk, iid)
        });
        if attempt.is_err() {
            com.discard_unreferenced_since(m, mark)?;
        }
        attempt
    }
}

/// Maps CLSIDs to factories, at most one per class.
pub struct Registry {
    com: Com,
    classes: BTreeMap<Clsid, ClassFactory>,
}

impl Registry {
    pub fn new(com: Com) -> Self {
        Registry {
            com,
            classes: BTreeMap::new(),
        }
    }

    pub fn com(&self) -> &Com {
        &self.com
    }

    pub fn register_class_object(&mut self, factory: ClassFactory) -> Result<(), ComError> {
        let clsid = factory.clsid;
        if self.classes.contains_key(&clsid) {
            return Err(ComError::DuplicateClass(clsid));
        }
        self.classes.insert(clsid, factory);
        Ok(())
    }

    pub fn revoke_class_object(&mut self, clsid: Clsid) -> Result<ClassFactory, ComError> {
        self.classes.remove(&clsid).ok_or(ComError::ClassNotRegistered(clsid))
    }

    pub fn get_class_object(&self, clsid: Clsid) -> Result<&ClassFactory, ComError> {
        self.classes.get(&clsid).ok_or(ComError::ClassNotRegistered(clsid))
    }

    pub fn create_instance(&self, m: &mut Machine, clsid: Clsid, iid: &Iid) -> Result<InterfaceRef, ComError> {
        self.get_class_object(clsid)?.create(m, &self.com, iid)
    }

    /// One `CLSID {GUID} name` line per class, in GUID order.
    pub fn dump(&self) -> String {
        self.classes
            .values()
            .map(|f| format!("CLSID {} {}\n", f.clsid, f.name))
            .collect()
    }

    /// Rebuilds a registry from [`dump`](Self::dump) text, taking each
    /// named factory from `catalog`.
    pub fn load(com: Com, text: &str, catalog: &[ClassFactory]) -> Result<Self, ComError> {
        let mut reg = Registry::new(com);
        for (n, line) in text.lines().enumerate() {
            let err = |msg: String| ComError::RegistryText { line: n + 1, msg };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kw, guid, name] = parts[..] else {
                return Err(err("expected `CLSID {GUID} name`".into()));
            };
            if kw != "CLSID" {
                return Err(err(format!("unknown keyword `{kw}`")));
            }
            let clsid = Clsid(guid.parse::<Guid>().map_err(|e| err(e.to_string()))?);
            let factory = catalog
                .iter()
                .find(|f| f.name == name)
                .ok_or_else(|| err(format!("no factory named `{name}`")))?;
            reg.register_class_object(ClassFactory {
                clsid,
                ..factory.clone()
            })
            .map_err(|e| err(e.to_string()))?;
        }
        Ok(reg)
    }
}
