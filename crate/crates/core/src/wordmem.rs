//! Word-addressed virtual ABI.
//!
//! Everything that crosses the foreign boundary is a 32-bit word. A
//! [`Machine`] owns three things: a heap of word blocks, a table mapping
//! callable addresses to word-list functions, and a registry of simulated
//! libraries exporting named symbols. No machine code is generated; a
//! "function pointer" is an address in the closure region that the table
//! resolves back to an [`Rc`]'d closure.
//!
//! Address space layout:
//!
//! ```text
//! 0x00000000              null
//! 0x00001000 ..0x08000000 heap blocks, one guard word between blocks
//! 0x08000000 ..           closure region, 4 bytes per registered function
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

/// A 32-bit machine word. Arithmetic on words wraps modulo 2^32.
pub type Word = u32;

pub const WORD_BYTES: u32 = 4;
pub const HEAP_BASE: u32 = 0x0000_1000;
pub const CLOSURE_BASE: u32 = 0x0800_0000;

/// A function callable through the virtual ABI.
///
/// The machine is handed back to the callee so callbacks can allocate,
/// read, and call other functions while they run.
pub type WordFn = Rc<dyn Fn(&mut Machine, &[Word]) -> Result<Word, Fault>>;

/// Wraps a closure as a [`WordFn`].
pub fn word_fn<F>(f: F) -> WordFn
where
    F: Fn(&mut Machine, &[Word]) -> Result<Word, Fault> + 'static,
{
    Rc::new(f)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Addr(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Null,
    Heap,
    Closure,
    /// Nonzero addresses below the heap base.
    Unmapped,
}

impl Addr {
    pub const NULL: Addr = Addr(0);

    pub const fn new(word: Word) -> Self {
        Addr(word)
    }

    pub const fn word(self) -> Word {
        self.0
    }

    pub fn is_null(self) -> bool {
        self.0 == 0
    }

    pub fn region(self) -> Region {
        match self.0 {
            0 => Region::Null,
            w if w < HEAP_BASE => Region::Unmapped,
            w if w < CLOSURE_BASE => Region::Heap,
            _ => Region::Closure,
        }
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:08X}", self.0)
    }
}

impl fmt::Debug for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Addr> for Word {
    fn from(a: Addr) -> Word {
        a.0
    }
}

/// Stack discipline of a foreign entry point. The simulated call has no
/// stack, so the convention only decides how an arity mismatch is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// Callee pops; used by (almost) all Win32 and COM entry points.
    Pascal,
    Cdecl,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Pascal => "pascal",
            Convention::Cdecl => "cdecl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("bad allocation size {0}")]
    BadSize(usize),
    #[error("double free of {0}")]
    DoubleFree(Addr),
    #[error("{0} is not a heap address")]
    BadRegion(Addr),
    #[error("access of {len} word(s) at {addr} is out of bounds")]
    OutOfBounds { addr: Addr, len: usize },
    #[error("use after free at {0}")]
    UseAfterFree(Addr),
    #[error("{0} is not callable")]
    NotCallable(Addr),
    #[error("unknown library `{0}`")]
    UnknownLibrary(String),
    #[error("unknown symbol `{symbol}` in `{library}`")]
    UnknownSymbol { library: String, symbol: String },
    #[error("`{symbol}` ({convention}) takes {expected} argument word(s), called with {got}")]
    ArityMismatch {
        symbol: String,
        convention: Convention,
        expected: usize,
        got: usize,
    },
    #[error("heap exhausted")]
    OutOfMemory,
    /// Failure raised by a callee written above the word layer.
    #[error("{0}")]
    Raised(String),
}

struct Block {
    cells: Vec<Word>,
    live: bool,
}

/// Heap blocks keyed by base address. Dead blocks stay in the table so
/// stale accesses can be told apart from wild ones; addresses are never
/// reused.
#[derive(Default)]
struct Heap {
    blocks: BTreeMap<u32, Block>,
    cursor: u32,
    live: usize,
}

impl Heap {
    fn alloc(&mut self, n: usize) -> Result<Addr, Fault> {
        if n == 0 {
            return Err(Fault::BadSize(n));
        }
        let base = if self.cursor == 0 { HEAP_BASE } else { self.cursor };
        let bytes = (n as u64 + 1) * WORD_BYTES as u64;
        let next = base as u64 + bytes;
        if next > CLOSURE_BASE as u64 {
            return Err(Fault::OutOfMemory);
        }
        self.cursor = next as u32;
        self.blocks.insert(
            base,
            Block {
                cells: vec![0; n],
                live: true,
            },
        );
        self.live += 1;
        Ok(Addr(base))
    }

    fn free(&mut self, a: Addr) -> Result<(), Fault> {
        if a.region() != Region::Heap {
            return Err(Fault::BadRegion(a));
        }
        match self.blocks.get_mut(&a.0) {
            Some(b) if b.live => {
                b.live = false;
                b.cells = Vec::new();
                self.live -= 1;
                Ok(())
            }
            Some(_) => Err(Fault::DoubleFree(a)),
            // Interior pointers and wild addresses are not allocations.
            None => Err(Fault::BadRegion(a)),
        }
    }

    /// Finds the live block holding `[a, a + len)` and the word index of `a`.
    fn locate(&mut self, a: Addr, len: usize) -> Result<(&mut Block, usize), Fault> {
        let oob = Fault::OutOfBounds { addr: a, len };
        match a.region() {
            Region::Heap => {}
            Region::Unmapped => return Err(oob),
            Region::Null | Region::Closure => return Err(Fault::BadRegion(a)),
        }
        let (&base, block) = self.blocks.range_mut(..=a.0).next_back().ok_or(oob.clone())?;
        let delta = a.0 - base;
        if !delta.is_multiple_of(WORD_BYTES) {
            return Err(oob);
        }
        let index = (delta / WORD_BYTES) as usize;
        if !block.live {
            return Err(Fault::UseAfterFree(a));
        }
        if index + len > block.cells.len() {
            return Err(oob);
        }
        Ok((block, index))
    }

    fn block_len(&self, a: Addr) -> Option<usize> {
        self.blocks.get(&a.0).filter(|b| b.live).map(|b| b.cells.len())
    }
}

#[derive(Default)]
struct ClosureTable {
    funs: Vec<WordFn>,
    by_identity: HashMap<*const (), Addr>,
}

impl ClosureTable {
    fn insert(&mut self, f: WordFn) -> Addr {
        let identity = Rc::as_ptr(&f) as *const ();
        if let Some(&a) = self.by_identity.get(&identity) {
            return a;
        }
        let a = Addr(CLOSURE_BASE + WORD_BYTES * self.funs.len() as u32);
        self.funs.push(f);
        self.by_identity.insert(identity, a);
        a
    }

    fn get(&self, a: Addr) -> Option<WordFn> {
        if a.region() != Region::Closure || !(a.0 - CLOSURE_BASE).is_multiple_of(WORD_BYTES) {
            return None;
        }
        let index = ((a.0 - CLOSURE_BASE) / WORD_BYTES) as usize;
        self.funs.get(index).cloned()
    }
}

#[derive(Clone, Debug)]
pub struct Symbol {
    pub addr: Addr,
    pub convention: Convention,
    pub arity: usize,
}

/// Handle to an opened library.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Library {
    name: String,
}

impl Library {
    pub fn name(&self) -> &str {
        &self.name
    }
}

/// One world of the virtual ABI. All operations on a machine are
/// externally serialized; callbacks run on the caller's thread.
#[derive(Default)]
pub struct Machine {
    heap: Heap,
    closures: ClosureTable,
    libraries: BTreeMap<String, BTreeMap<String, Symbol>>,
    exported: HashMap<Addr, String>,
    trace: Option<Vec<String>>,
}

impl Machine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts recording one line per operation (`op addr args -> result`).
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = self.trace.as_mut() {
            t.push(line());
        }
    }

    /// Number of live heap blocks.
    pub fn live_allocations(&self) -> usize {
        self.heap.live
    }

    /// Size in words of the live block starting exactly at `a`.
    pub fn block_len(&self, a: Addr) -> Option<usize> {
        self.heap.block_len(a)
    }

    pub fn alloc(&mut self, words: usize) -> Result<Addr, Fault> {
        let r = self.heap.alloc(words);
        self.log(|| format!("alloc - {words} -> {}", show(&r)));
        r
    }

    pub fn free(&mut self, a: Addr) -> Result<(), Fault> {
        let r = self.heap.free(a);
        self.log(|| format!("free {a} - -> {}", show_unit(&r)));
        r
    }

    /// Address `i` words past `a`. Never fails; bounds are checked on access.
    pub fn offset(a: Addr, i: i32) -> Addr {
        Addr(a.0.wrapping_add((i as u32).wrapping_mul(WORD_BYTES)))
    }

    pub fn store(&mut self, a: Addr, ws: &[Word]) -> Result<(), Fault> {
        let r = self.heap.locate(a, ws.len()).map(|(block, i)| {
            block.cells[i..i + ws.len()].copy_from_slice(ws);
        });
        self.log(|| format!("store {a} {} -> {}", show_words(ws), show_unit(&r)));
        r
    }

    pub fn read(&mut self, a: Addr, n: usize) -> Result<Vec<Word>, Fault> {
        let r = self.heap.locate(a, n).map(|(block, i)| block.cells[i..i + n].to_vec());
        self.log(|| {
            let out = match &r {
                Ok(ws) => show_words(ws),
                Err(e) => format!("error: {e}"),
            };
            format!("read {a} {n} -> {out}")
        });
        r
    }

    pub fn read_word(&mut self, a: Addr) -> Result<Word, Fault> {
        Ok(self.read(a, 1)?[0])
    }

    pub fn store_word(&mut self, a: Addr, w: Word) -> Result<(), Fault> {
        self.store(a, &[w])
    }

    /// Allocates a block holding exactly `ws`.
    pub fn alloc_words(&mut self, ws: &[Word]) -> Result<Addr, Fault> {
        let a = self.alloc(ws.len())?;
        self.store(a, ws)?;
        Ok(a)
    }

    /// Registers `f` and returns its callable address. The same `Rc`
    /// always maps to the same address.
    pub fn fun_to_addr(&mut self, f: &WordFn) -> Addr {
        let a = self.closures.insert(f.clone());
        self.log(|| format!("funToAddr - - -> {a}"));
        a
    }

    pub fn addr_to_fun(&self, a: Addr) -> Result<WordFn, Fault> {
        self.closures.get(a).ok_or(Fault::NotCallable(a))
    }

    /// Calls the function at `a`. Exported symbols have their declared
    /// arity checked first.
    pub fn call(&mut self, a: Addr, args: &[Word]) -> Result<Word, Fault> {
        let f = self.addr_to_fun(a)?;
        if let Some(qualified) = self.exported.get(&a) {
            let (lib, sym) = qualified.split_once('!').expect("qualified symbol");
            let s = &self.libraries[lib][sym];
            if s.arity != args.len() {
                return Err(Fault::ArityMismatch {
                    symbol: sym.to_string(),
                    convention: s.convention,
                    expected: s.arity,
                    got: args.len(),
                });
            }
        }
        let r = f(self, args);
        self.log(|| format!("call {a} {} -> {}", show_words(args), show(&r)));
        r
    }

    /// Creates (or extends) a simulated library.
    pub fn define_library(&mut self, name: &str) -> Library {
        self.libraries.entry(name.to_string()).or_default();
        Library { name: name.to_string() }
    }

    pub fn define_symbol(
        &mut self,
        lib: &Library,
        name: &str,
        convention: Convention,
        arity: usize,
        f: WordFn,
    ) -> Addr {
        let addr = self.fun_to_addr(&f);
        self.exported.insert(addr, format!("{}!{}", lib.name, name));
        self.libraries.entry(lib.name.clone()).or_default().insert(
            name.to_string(),
            Symbol {
                addr,
                convention,
                arity,
            },
        );
        addr
    }

    pub fn open_library(&self, name: &str) -> Result<Library, Fault> {
        if self.libraries.contains_key(name) {
            Ok(Library { name: name.to_string() })
        } else {
            Err(Fault::UnknownLibrary(name.to_string()))
        }
    }

    pub fn get_function(&self, lib: &Library, name: &str) -> Result<Addr, Fault> {
        self.symbol(lib, name).map(|s| s.addr)
    }

    pub fn symbol(&self, lib: &Library, name: &str) -> Result<&Symbol, Fault> {
        let syms = self
            .libraries
            .get(&lib.name)
            .ok_or_else(|| Fault::UnknownLibrary(lib.name.clone()))?;
        syms.get(name).ok_or_else(|| Fault::UnknownSymbol {
            library: lib.name.clone(),
            symbol: name.to_string(),
        })
    }
}

fn show_words(ws: &[Word]) -> String {
    let inner: Vec<String> = ws.iter().map(|w| format!("0x{w:08X}")).collect();
    format!("[{}]", inner.join(","))
}

fn show<T: fmt::Display>(r: &Result<T, Fault>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn show_unit(r: &Result<(), Fault>) -> String {
    match r {
        Ok(()) => "()".to_string(),
        Err(e) => format!("error: {e}"),
    }
}
