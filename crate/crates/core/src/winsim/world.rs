//! The simulated window system: classes, windows, one message queue,
//! timers, and an append-only trace.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use super::{SimError, MS_PER_TICK, WM_CREATE, WM_DESTROY, WM_SIZE, WM_TIMER};
use crate::wordmem::{Addr, Fault, Machine, Word};

/// Asset name of the bouncing logo and its intrinsic size.
pub const LOGO_ASSET: &str = "smlnj.bmp";
pub const LOGO_SIZE: (i32, i32) = (158, 131);

/// One queued or sent message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Msg {
    pub hwnd: Word,
    pub code: Word,
    pub wparam: Word,
    pub lparam: Word,
    pub tick: u64,
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TICK {} MSG 0x{:08X} 0x{:08X} 0x{:08X} 0x{:08X}",
            self.tick, self.hwnd, self.code, self.wparam, self.lparam
        )
    }
}

/// An argument as it appears in a `DRAW` trace line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceArg {
    Int(i32),
    Str(String),
    Points(Vec<(i32, i32)>),
}

impl From<i32> for TraceArg {
    fn from(i: i32) -> Self {
        TraceArg::Int(i)
    }
}

impl From<Word> for TraceArg {
    fn from(w: Word) -> Self {
        TraceArg::Int(w as i32)
    }
}

impl From<&str> for TraceArg {
    fn from(s: &str) -> Self {
        TraceArg::Str(s.into())
    }
}

impl fmt::Display for TraceArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceArg::Int(i) => write!(f, "{i}"),
            TraceArg::Str(s) => write!(f, "{s:?}"),
            TraceArg::Points(ps) => {
                let items: Vec<String> = ps.iter().map(|(x, y)| format!("({x},{y})")).collect();
                write!(f, "[{}]", items.join(","))
            }
        }
    }
}

/// A window class as registered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WndClass {
    pub name: String,
    pub wndproc: Addr,
    pub style: i32,
    pub hinstance: Word,
    pub icon: Word,
    pub cursor: Word,
    pub brush: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub hwnd: Word,
    pub class: String,
    pub title: String,
    pub rect: (i32, i32, i32, i32),
    pub visible: bool,
    pub destroyed: bool,
}

/// Arguments of `CreateWindowExA` after string decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CreateParams {
    pub ex_style: i32,
    pub class: String,
    pub title: String,
    pub style: i32,
    pub x: i32,
    pub y: i32,
    pub width: i32,
    pub height: i32,
    pub parent: Word,
    pub menu: Word,
    pub hinstance: Word,
    pub param: Word,
}

#[derive(Clone, Debug)]
struct Timer {
    period: u64,
    due: u64,
    callback: Addr,
}

const CW_USEDEFAULT: i32 = i32::MIN;

struct WinState {
    classes: BTreeMap<String, (Word, WndClass)>,
    windows: BTreeMap<Word, Window>,
    queue: VecDeque<Msg>,
    timers: BTreeMap<(Word, Word), Timer>,
    tick: u64,
    trace: Vec<String>,
    quit: Option<i32>,
    next_handle: Word,
    next_atom: Word,
    hinstance: Word,
    selected: HashMap<Word, Word>,
    bitmaps: HashMap<Word, (i32, i32)>,
    assets: BTreeMap<String, (i32, i32)>,
    destroy_at: Option<u64>,
}

impl WinState {
    fn fresh(&mut self) -> Word {
        let h = self.next_handle;
        self.next_handle += 1;
        h
    }
}

/// Shared handle to one simulated desktop. Cloning shares the world.
#[derive(Clone)]
pub struct SimWorld {
    st: Rc<RefCell<WinState>>,
}

impl Default for SimWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl SimWorld {
    pub fn new() -> Self {
        let mut st = WinState {
            classes: BTreeMap::new(),
            windows: BTreeMap::new(),
            queue: VecDeque::new(),
            timers: BTreeMap::new(),
            tick: 0,
            trace: Vec::new(),
            quit: None,
            next_handle: 1,
            next_atom: 0xC000,
            hinstance: 0,
            selected: HashMap::new(),
            bitmaps: HashMap::new(),
            assets: BTreeMap::from([(LOGO_ASSET.to_string(), LOGO_SIZE)]),
            destroy_at: None,
        };
        st.hinstance = st.fresh();
        SimWorld {
            st: Rc::new(RefCell::new(st)),
        }
    }

    /// The module handle handed to the program's entry point.
    pub fn hinstance(&self) -> Word {
        self.st.borrow().hinstance
    }

    pub fn tick(&self) -> u64 {
        self.st.borrow().tick
    }

    pub fn quit_code(&self) -> Option<i32> {
        self.st.borrow().quit
    }

    pub fn trace(&self) -> Vec<String> {
        self.st.borrow().trace.clone()
    }

    /// The trace as a file: one line per event, LF-terminated.
    pub fn trace_text(&self) -> String {
        self.st.borrow().trace.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn window(&self, hwnd: Word) -> Option<Window> {
        self.st.borrow().windows.get(&hwnd).cloned()
    }

    pub fn class(&self, name: &str) -> Option<WndClass> {
        self.st.borrow().classes.get(name).map(|(_, c)| c.clone())
    }

    pub fn add_asset(&self, name: &str, size: (i32, i32)) {
        self.st.borrow_mut().assets.insert(name.into(), size);
    }

    pub fn bitmap_size(&self, h: Word) -> Option<(i32, i32)> {
        self.st.borrow().bitmaps.get(&h).copied()
    }

    pub fn queue_len(&self) -> usize {
        self.st.borrow().queue.len()
    }

    pub fn has_timer(&self, hwnd: Word, id: Word) -> bool {
        self.st.borrow().timers.contains_key(&(hwnd, id))
    }

    /// Appends a `DRAW` line for an API call.
    pub fn record(&self, op: &str, args: &[TraceArg]) {
        let mut st = self.st.borrow_mut();
        let mut line = format!("TICK {} DRAW {op}", st.tick);
        for a in args {
            line.push(' ');
            line.push_str(&a.to_string());
        }
        st.trace.push(line);
    }

    /// Records a GDI or resource call and returns its result. Handle
    /// results are always fresh.
    pub fn gdi_record(&self, op: &str, args: &[TraceArg]) -> Word {
        self.record(op, args);
        let int = |k: usize| match args.get(k) {
            Some(TraceArg::Int(i)) => *i as Word,
            _ => 0,
        };
        let mut st = self.st.borrow_mut();
        match op {
            "GetDC" | "CreateCompatibleDC" | "GetStockObject" | "LoadIconA" | "LoadCursorA" => st.fresh(),
            "LoadImageA" => {
                let Some(TraceArg::Str(name)) = args.get(1) else {
                    return 0;
                };
                let Some(size) = st.assets.get(name).copied() else {
                    return 0;
                };
                let h = st.fresh();
                st.bitmaps.insert(h, size);
                h
            }
            "SelectObject" => st.selected.insert(int(0), int(1)).unwrap_or(0),
            "DeleteObject" => {
                let h = int(0);
                if h == 0 {
                    return 0;
                }
                st.bitmaps.remove(&h);
                1
            }
            "DeleteDC" => {
                st.selected.remove(&int(0));
                1
            }
            _ => 1,
        }
    }

    /// Registers a class; 0 if the name is taken.
    pub fn register_class_ex(&self, class: WndClass) -> Word {
        let mut st = self.st.borrow_mut();
        if st.classes.contains_key(&class.name) {
            return 0;
        }
        let atom = st.next_atom;
        st.next_atom += 1;
        st.classes.insert(class.name.clone(), (atom, class));
        atom
    }

    /// Removes a class that no live window uses.
    pub fn unregister_class(&self, name: &str) -> bool {
        let mut st = self.st.borrow_mut();
        let in_use = st.windows.values().any(|w| !w.destroyed && w.class == name);
        !in_use && st.classes.remove(name).is_some()
    }

    /// Creates a window, then sends it WM_CREATE and WM_SIZE. Returns 0
    /// for an unknown class.
    pub fn create_window_ex(&self, m: &mut Machine, p: &CreateParams) -> Result<Word, Fault> {
        let hwnd = {
            let mut st = self.st.borrow_mut();
            if !st.classes.contains_key(&p.class) {
                return Ok(0);
            }
            let hwnd = st.fresh();
            let origin = |v: i32| if v == CW_USEDEFAULT { 0 } else { v };
            st.windows.insert(
                hwnd,
                Window {
                    hwnd,
                    class: p.class.clone(),
                    title: p.title.clone(),
                    rect: (origin(p.x), origin(p.y), p.width, p.height),
                    visible: false,
                    destroyed: false,
                },
            );
            hwnd
        };
        let size = ((p.height as Word & 0xFFFF) << 16) | (p.width as Word & 0xFFFF);
        self.send(m, hwnd, WM_CREATE, 0, 0)?;
        self.send(m, hwnd, WM_SIZE, 0, size)?;
        Ok(hwnd)
    }

    pub fn show_window(&self, hwnd: Word, cmd: i32) -> bool {
        let mut st = self.st.borrow_mut();
        match st.windows.get_mut(&hwnd) {
            Some(w) if !w.destroyed => {
                let was = w.visible;
                w.visible = cmd != 0;
                was
            }
            _ => false,
        }
    }

    pub fn is_window(&self, hwnd: Word) -> bool {
        self.st.borrow().windows.get(&hwnd).is_some_and(|w| !w.destroyed)
    }

    /// Sends WM_DESTROY, then retires the window with its timers and
    /// pending messages.
    pub fn destroy_window(&self, m: &mut Machine, hwnd: Word) -> Result<bool, Fault> {
        if !self.is_window(hwnd) {
            return Ok(false);
        }
        self.send(m, hwnd, WM_DESTROY, 0, 0)?;
        let mut st = self.st.borrow_mut();
        if let Some(w) = st.windows.get_mut(&hwnd) {
            w.destroyed = true;
        }
        st.timers.retain(|(h, _), _| *h != hwnd);
        st.queue.retain(|msg| msg.hwnd != hwnd);
        Ok(true)
    }

    /// Dispatches a message to the window's wndproc now.
    pub fn send(&self, m: &mut Machine, hwnd: Word, code: Word, wparam: Word, lparam: Word) -> Result<Word, Fault> {
        let msg = Msg {
            hwnd,
            code,
            wparam,
            lparam,
            tick: self.tick(),
        };
        self.dispatch(m, &msg)
    }

    /// Appends a message to the queue.
    pub fn post(&self, hwnd: Word, code: Word, wparam: Word, lparam: Word) {
        let mut st = self.st.borrow_mut();
        let tick = st.tick;
        st.queue.push_back(Msg {
            hwnd,
            code,
            wparam,
            lparam,
            tick,
        });
    }

    fn dispatch(&self, m: &mut Machine, msg: &Msg) -> Result<Word, Fault> {
        let target = {
            let mut st = self.st.borrow_mut();
            let Some(w) = st.windows.get(&msg.hwnd).filter(|w| !w.destroyed) else {
                return Ok(0);
            };
            let wndproc = st.classes.get(&w.class).map(|(_, c)| c.wndproc);
            st.trace.push(msg.to_string());
            match (msg.code, Addr::new(msg.lparam)) {
                (WM_TIMER, cb) if !cb.is_null() => Some((cb, true)),
                _ => wndproc.map(|a| (a, false)),
            }
        };
        match target {
            Some((cb, true)) => {
                let time = (msg.tick * MS_PER_TICK) as Word;
                m.call(cb, &[msg.hwnd, WM_TIMER, msg.wparam, time])
            }
            Some((wndproc, false)) => m.call(wndproc, &[msg.hwnd, msg.code, msg.wparam, msg.lparam]),
            None => Ok(0),
        }
    }

    /// Starts or resets a timer firing every `ceil(ms / MS_PER_TICK)`
    /// ticks. Returns the id, or 0 for a dead window.
    pub fn set_timer(&self, hwnd: Word, id: Word, ms: Word, callback: Addr) -> Word {
        if !self.is_window(hwnd) {
            return 0;
        }
        let mut st = self.st.borrow_mut();
        let period = (ms as u64).div_ceil(MS_PER_TICK).max(1);
        let due = st.tick + period;
        st.timers.insert((hwnd, id), Timer { period, due, callback });
        id
    }

    pub fn kill_timer(&self, hwnd: Word, id: Word) -> bool {
        self.st.borrow_mut().timers.remove(&(hwnd, id)).is_some()
    }

    pub fn post_quit_message(&self, code: i32) {
        self.st.borrow_mut().quit = Some(code);
    }

    /// Default processing: nothing the corpus depends on, always 0.
    pub fn def_window_proc(&self, _hwnd: Word, _msg: Word, _wparam: Word, _lparam: Word) -> Word {
        0
    }

    /// Scripts a user close: every live window is destroyed at the end
    /// of tick `tick`.
    pub fn destroy_at(&self, tick: u64) {
        self.st.borrow_mut().destroy_at = Some(tick);
    }

    /// Runs up to `max_ticks` ticks. Each tick fires due timers in
    /// (hwnd, id) order, drains the queue, then runs scripted actions.
    /// Returns the exit code once PostQuitMessage has been called.
    pub fn pump(&self, m: &mut Machine, max_ticks: u64) -> Result<Option<i32>, SimError> {
        for _ in 0..max_ticks {
            if let Some(code) = self.quit_code() {
                return Ok(Some(code));
            }
            let tick = {
                let mut st = self.st.borrow_mut();
                st.tick += 1;
                let tick = st.tick;
                let mut due = Vec::new();
                for (&(hwnd, id), t) in st.timers.iter_mut() {
                    if t.due <= tick {
                        due.push((hwnd, id, t.callback));
                        t.due += t.period;
                    }
                }
                for (hwnd, id, cb) in due {
                    st.queue.push_back(Msg {
                        hwnd,
                        code: WM_TIMER,
                        wparam: id,
                        lparam: cb.word(),
                        tick,
                    });
                }
                tick
            };
            loop {
                let next = self.st.borrow_mut().queue.pop_front();
                let Some(mut msg) = next else { break };
                msg.tick = tick;
                self.dispatch(m, &msg)
                    .map_err(|fault| SimError::WndProc { msg, fault })?;
                if let Some(code) = self.quit_code() {
                    return Ok(Some(code));
                }
            }
            if self.st.borrow().destroy_at == Some(tick) {
                let live: Vec<Word> = self
                    .st
                    .borrow()
                    .windows
                    .values()
                    .filter(|w| !w.destroyed)
                    .map(|w| w.hwnd)
                    .collect();
                for hwnd in live {
                    self.destroy_window(m, hwnd).map_err(|fault| SimError::WndProc {
                        msg: Msg {
                            hwnd,
                            code: WM_DESTROY,
                            wparam: 0,
                            lparam: 0,
                            tick,
                        },
                        fault,
                    })?;
                }
            }
        }
        Ok(self.quit_code())
    }
}
