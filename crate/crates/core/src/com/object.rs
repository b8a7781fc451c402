//! COM objects laid out in word memory.
//!
//! An interface reference is the address of a one-word block holding the
//! vtable address. Every vtable starts with the same three closures
//! (QueryInterface, AddRef, Release), shared by all objects of one [`Com`]
//! world; they find their object by looking up `this`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::{Rc, Weak};

use thiserror::Error;

use super::{Guid, IID_IDISPATCH, IID_IUNKNOWN};
use crate::marshal::MarshalError;
use crate::wordmem::{word_fn, Addr, Convention, Fault, Machine, Word, WordFn};

pub type Hresult = u32;

pub const S_OK: Hresult = 0;
pub const E_NOTIMPL: Hresult = 0x8000_4001;
pub const E_NOINTERFACE: Hresult = 0x8000_4002;
pub const E_POINTER: Hresult = 0x8000_4003;
pub const E_FAIL: Hresult = 0x8000_4005;
pub const REGDB_E_CLASSNOTREG: Hresult = 0x8004_0154;

pub const fn failed(hr: Hresult) -> bool {
    hr & 0x8000_0000 != 0
}

/// Number of IUnknown slots at the head of every vtable.
pub const IUNKNOWN_SLOTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComError {
    #[error("interface {0} not supported (E_NOINTERFACE)")]
    NoInterface(String),
    #[error("class {0} is not registered (REGDB_E_CLASSNOTREG)")]
    ClassNotRegistered(Clsid),
    #[error("class {0} is already registered")]
    DuplicateClass(Clsid),
    #[error("slot {index} is outside a {slots}-slot vtable")]
    SlotOutOfRange { index: usize, slots: usize },
    #[error("use after free: interface {0} belongs to a destroyed object")]
    DeadObject(Addr),
    #[error("{found} reference used where {expected} is required")]
    WitnessMismatch { expected: String, found: String },
    #[error("no method `{method}` on {interface}")]
    UnknownMethod { interface: String, method: String },
    #[error("call failed with HRESULT 0x{0:08X}")]
    Failed(Hresult),
    #[error("registry text line {line}: {msg}")]
    RegistryText { line: usize, msg: String },
    #[error(transparent)]
    Marshal(#[from] MarshalError),
    #[error(transparent)]
    Fault(#[from] Fault),
}

impl ComError {
    /// The HRESULT a COM caller would observe for this failure.
    pub fn hresult(&self) -> Hresult {
        match self {
            ComError::NoInterface(_) => E_NOINTERFACE,
            ComError::ClassNotRegistered(_) => REGDB_E_CLASSNOTREG,
            ComError::Failed(hr) => *hr,
            _ => E_FAIL,
        }
    }
}

/// An interface identifier, tagged with the name of the interface it
/// witnesses. Two IIDs with the same GUID but different names are
/// different witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iid {
    guid: Guid,
    name: String,
}

impl Iid {
    pub fn new(name: impl Into<String>, guid: Guid) -> Self {
        Iid {
            guid,
            name: name.into(),
        }
    }

    pub fn iunknown() -> Self {
        Iid::new("IUnknown", IID_IUNKNOWN)
    }

    pub fn idispatch() -> Self {
        Iid::new("IDispatch", IID_IDISPATCH)
    }

    pub fn guid(&self) -> Guid {
        self.guid
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Iid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.guid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clsid(pub Guid);

impl fmt::Display for Clsid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "object#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceRef {
    pub addr: Addr,
    pub iid: Iid,
    pub owner: ObjectId,
}

impl InterfaceRef {
    /// Runtime witness check: this reference must be for `expected`.
    pub fn expect(&self, expected: &str) -> Result<(), ComError> {
        if self.iid.name() == expected {
            Ok(())
        } else {
            Err(ComError::WitnessMismatch {
                expected: expected.into(),
                found: self.iid.name().into(),
            })
        }
    }
}

type Hook = Box<dyn FnOnce(&mut Machine)>;

struct Object {
    clsid: Option<Clsid>,
    refcount: u32,
    identity: Addr,
    exposed: Vec<(Guid, Addr)>,
    blocks: Vec<Addr>,
    hooks: Vec<Hook>,
}

#[derive(Default)]
struct State {
    objects: BTreeMap<ObjectId, Object>,
    interfaces: HashMap<Addr, ObjectId>,
    next: u32,
}

impl State {
    fn owner(&self, this: Word) -> Result<ObjectId, Fault> {
        self.interfaces
            .get(&Addr::new(this))
            .copied()
            .ok_or(Fault::UseAfterFree(Addr::new(this)))
    }
}

/// A COM world: the live objects and the shared IUnknown closures.
#[derive(Clone)]
pub struct Com {
    state: Rc<RefCell<State>>,
    unknown: [WordFn; IUNKNOWN_SLOTS],
}

fn arity(symbol: &str, expected: usize, args: &[Word]) -> Result<(), Fault> {
    if args.len() == expected {
        return Ok(());
    }
    Err(Fault::ArityMismatch {
        symbol: symbol.into(),
        convention: Convention::Pascal,
        expected,
        got: args.len(),
    })
}

fn upgrade(w: &Weak<RefCell<State>>) -> Result<Rc<RefCell<State>>, Fault> {
    w.upgrade()
        .ok_or_else(|| Fault::Raised("COM world has been dropped".into()))
}

impl Default for Com {
    fn default() -> Self {
        Self::new()
    }
}

impl Com {
    pub fn new() -> Self {
        let state = Rc::new(RefCell::new(State::default()));
        let weak = Rc::downgrade(&state);
        let qi = {
            let weak = weak.clone();
            word_fn(move |m, args| {
                arity("QueryInterface", 3, args)?;
                let state = upgrade(&weak)?;
                let id = state.borrow().owner(args[0])?;
                let out = Addr::new(args[2]);
                if out.is_null() {
                    return Ok(E_POINTER);
                }
                let w = m.read(Addr::new(args[1]), 4)?;
                let iid = Guid::from_words([w[0], w[1], w[2], w[3]]);
                let found = {
                    let mut st = state.borrow_mut();
                    let obj = st.objects.get_mut(&id).ok_or(Fault::UseAfterFree(Addr::new(args[0])))?;
                    let found = if iid == IID_IUNKNOWN {
                        Some(obj.identity)
                    } else {
                        obj.exposed.iter().find(|(g, _)| *g == iid).map(|(_, a)| *a)
                    };
                    if found.is_some() {
                        obj.refcount += 1;
                    }
                    found
                };
                match found {
                    Some(a) => {
                        m.store_word(out, a.word())?;
                        Ok(S_OK)
                    }
                    None => {
                        m.store_word(out, 0)?;
                        Ok(E_NOINTERFACE)
                    }
                }
            })
        };
        let addref = {
            let weak = weak.clone();
            word_fn(move |_, args| {
                arity("AddRef", 1, args)?;
                let state = upgrade(&weak)?;
                let mut st = state.borrow_mut();
                let id = st.owner(args[0])?;
                let obj = st.objects.get_mut(&id).expect("interface table and objects agree");
                obj.refcount += 1;
                Ok(obj.refcount)
            })
        };
        let release = word_fn(move |m, args| {
            arity("Release", 1, args)?;
            let state = upgrade(&weak)?;
            let id = state.borrow().owner(args[0])?;
            let count = {
                let mut st = state.borrow_mut();
                let obj = st.objects.get_mut(&id).expect("interface table and objects agree");
                obj.refcount = obj.refcount.saturating_sub(1);
                obj.refcount
            };
            if count == 0 {
                destroy(&state, m, id)?;
            }
            Ok(count)
        });
        Com {
            state,
            unknown: [qi, addref, release],
        }
    }

    /// Creates an object with a count of 0 and its identity interface.
    /// The first successful QueryInterface brings the count to 1.
    pub fn new_object(&self, m: &mut Machine, clsid: Option<Clsid>) -> Result<ObjectId, ComError> {
        let id = {
            let mut st = self.state.borrow_mut();
            let id = ObjectId(st.next);
            st.next += 1;
            st.objects.insert(
                id,
                Object {
                    clsid,
                    refcount: 0,
                    identity: Addr::NULL,
                    exposed: Vec::new(),
                    blocks: Vec::new(),
                    hooks: Vec::new(),
                },
            );
            id
        };
        let unk = self.make_interface(m, id, &Iid::iunknown(), &[])?;
        self.state
            .borrow_mut()
            .objects
            .get_mut(&id)
            .expect("just inserted")
            .identity = unk.addr;
        Ok(id)
    }

    /// Builds `[qi, addref, release] ++ methods` and the pointer block
    /// referring to it, and exposes the result under `iid`.
    pub fn make_interface(
        &self,
        m: &mut Machine,
        owner: ObjectId,
        iid: &Iid,
        methods: &[WordFn],
    ) -> Result<InterfaceRef, ComError> {
        if !self.is_alive(owner) {
            return Err(ComError::DeadObject(Addr::NULL));
        }
        let slots: Vec<Word> = self
            .unknown
            .iter()
            .chain(methods)
            .map(|f| m.fun_to_addr(f).word())
            .collect();
        let vtable = m.alloc_words(&slots)?;
        let ptr = m.alloc_words(&[vtable.word()])?;
        let mut st = self.state.borrow_mut();
        st.interfaces.insert(ptr, owner);
        let obj = st.objects.get_mut(&owner).expect("checked alive");
        obj.blocks.extend([vtable, ptr]);
        if iid.guid() != IID_IUNKNOWN {
            obj.exposed.push((iid.guid(), ptr));
        }
        Ok(InterfaceRef {
            addr: ptr,
            iid: iid.clone(),
            owner,
        })
    }

    /// Answers QueryInterface for `iid` with an existing interface of the
    /// object, as a dual interface does for IDispatch.
    pub fn expose(&self, owner: ObjectId, iid: Guid, iface: Addr) -> Result<(), ComError> {
        let mut st = self.state.borrow_mut();
        if st.interfaces.get(&iface) != Some(&owner) {
            return Err(ComError::DeadObject(iface));
        }
        st.objects
            .get_mut(&owner)
            .expect("interface table and objects agree")
            .exposed
            .push((iid, iface));
        Ok(())
    }

    /// Runs `hook` when the object is destroyed.
    pub fn on_destroy(&self, owner: ObjectId, hook: impl FnOnce(&mut Machine) + 'static) -> Result<(), ComError> {
        let mut st = self.state.borrow_mut();
        let obj = st.objects.get_mut(&owner).ok_or(ComError::DeadObject(Addr::NULL))?;
        obj.hooks.push(Box::new(hook));
        Ok(())
    }

    pub fn is_alive(&self, id: ObjectId) -> bool {
        self.state.borrow().objects.contains_key(&id)
    }

    pub fn refcount(&self, id: ObjectId) -> Option<u32> {
        self.state.borrow().objects.get(&id).map(|o| o.refcount)
    }

    pub fn clsid(&self, id: ObjectId) -> Option<Clsid> {
        self.state.borrow().objects.get(&id).and_then(|o| o.clsid)
    }

    /// The object's canonical IUnknown interface, without touching the count.
    pub fn identity(&self, id: ObjectId) -> Option<InterfaceRef> {
        self.state.borrow().objects.get(&id).map(|o| InterfaceRef {
            addr: o.identity,
            iid: Iid::iunknown(),
            owner: id,
        })
    }

    /// Heap blocks owned by the object (vtables and pointer blocks).
    pub fn block_count(&self, id: ObjectId) -> Option<usize> {
        self.state.borrow().objects.get(&id).map(|o| o.blocks.len())
    }

    pub fn owner_of(&self, iface: Addr) -> Option<ObjectId> {
        self.state.borrow().interfaces.get(&iface).copied()
    }

    pub fn live_objects(&self) -> usize {
        self.state.borrow().objects.len()
    }

    pub(crate) fn next_id(&self) -> u32 {
        self.state.borrow().next
    }

    /// Destroys objects created at or after `mark` that nobody holds.
    pub(crate) fn discard_unreferenced_since(&self, m: &mut Machine, mark: u32) -> Result<(), ComError> {
        let doomed: Vec<ObjectId> = self
            .state
            .borrow()
            .objects
            .iter()
            .filter(|(id, o)| id.0 >= mark && o.refcount == 0)
            .map(|(id, _)| *id)
            .collect();
        for id in doomed {
            destroy(&self.state, m, id)?;
        }
        Ok(())
    }
}

fn destroy(state: &Rc<RefCell<State>>, m: &mut Machine, id: ObjectId) -> Result<(), Fault> {
    let obj = {
        let mut st = state.borrow_mut();
        let Some(obj) = st.objects.remove(&id) else {
            return Ok(());
        };
        st.interfaces.retain(|_, owner| *owner != id);
        obj
    };
    for b in &obj.blocks {
        m.free(*b)?;
    }
    for hook in obj.hooks {
        hook(m);
    }
    Ok(())
}

fn dead(i: &InterfaceRef) -> impl Fn(Fault) -> ComError + '_ {
    move |f| match f {
        Fault::UseAfterFree(_) => ComError::DeadObject(i.addr),
        f => ComError::Fault(f),
    }
}

/// Dereferences the interface to its vtable and returns slot `index`.
pub fn get_method(m: &mut Machine, i: &InterfaceRef, index: usize) -> Result<WordFn, ComError> {
    let vtable = Addr::new(m.read_word(i.addr).map_err(dead(i))?);
    let slots = m.block_len(vtable).ok_or(ComError::DeadObject(i.addr))?;
    if index >= slots {
        return Err(ComError::SlotOutOfRange { index, slots });
    }
    let f = m.read_word(Machine::offset(vtable, index as i32))?;
    Ok(m.addr_to_fun(Addr::new(f))?)
}

/// Calls slot `index` with `this` prepended to `args`.
pub fn call_slot(m: &mut Machine, i: &InterfaceRef, index: usize, args: &[Word]) -> Result<Word, ComError> {
    let f = get_method(m, i, index)?;
    let mut words = Vec::with_capacity(args.len() + 1);
    words.push(i.addr.word());
    words.extend_from_slice(args);
    f(m, &words).map_err(dead(i))
}

pub fn query_interface(m: &mut Machine, i: &InterfaceRef, iid: &Iid) -> Result<InterfaceRef, ComError> {
    let g = m.alloc_words(&iid.guid().to_words())?;
    let out = m.alloc(1)?;
    let hr = call_slot(m, i, 0, &[g.word(), out.word()]);
    let got = m.read_word(out);
    m.free(g)?;
    m.free(out)?;
    match hr? {
        S_OK => Ok(InterfaceRef {
            addr: Addr::new(got?),
            iid: iid.clone(),
            owner: i.owner,
        }),
        E_NOINTERFACE => Err(ComError::NoInterface(iid.name().into())),
        hr => Err(ComError::Failed(hr)),
    }
}

pub fn add_ref(m: &mut Machine, i: &InterfaceRef) -> Result<u32, ComError> {
    call_slot(m, i, 1, &[])
}

pub fn release(m: &mut Machine, i: &InterfaceRef) -> Result<u32, ComError> {
    call_slot(m, i, 2, &[])
}
