//! A headless, deterministic stand-in for the user32/gdi32 subset the
//! bouncing-logo program needs, plus that program itself.

mod adapter;
mod api;
pub mod bounce;
mod w32;
mod world;


use thiserror::Error;

use crate::marshal::MarshalError;
use crate::wordmem::{Fault, Word};

pub use adapter::{wndproc_queue_adapter, Handler, QueueAdapter};
pub use api::{install, WNDCLASSEX_BYTES};
pub use w32::{Arg, Direct, Win32, W32, WIN32_IDL};
pub use world::{CreateParams, Msg, SimWorld, TraceArg, Window, WndClass, LOGO_ASSET, LOGO_SIZE};

/// Simulated milliseconds per tick.
pub const MS_PER_TICK: u64 = 20;

pub const WM_CREATE: Word = 0x1;
pub const WM_DESTROY: Word = 0x2;
pub const WM_MOVE: Word = 0x3;
pub const WM_SIZE: Word = 0x5;
pub const WM_PAINT: Word = 0xF;
pub const WM_TIMER: Word = 0x113;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("window procedure failed on {msg}: {fault}")]
    WndProc { msg: Msg, fault: Fault },
    #[error("CreateWindowExA returned a null window")]
    NoWindow,
    #[error("unknown API `{0}`")]
    UnknownApi(String),
    #[error("{api}: {msg}")]
    BadArgs { api: String, msg: String },
    #[error("binding: {0}")]
    Binding(String),
    #[error("worker: {0}")]
    Worker(String),
    #[error(transparent)]
    Marshal(#[from] MarshalError),
    #[error(transparent)]
    Fault(#[from] Fault),
}

impl SimError {
    /// The error as seen by a word-level caller.
    pub fn into_fault(self) -> Fault {
        match self {
            SimError::Fault(f) => f,
            e => Fault::Raised(e.to_string()),
        }
    }
}

/// The four words a window procedure receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MsgArgs {
    pub hwnd: Word,
    pub code: Word,
    pub wparam: Word,
    pub lparam: Word,
}

/// Bitwise or of a list of flags; `or_words(&[]) == 0`.
pub fn or_words(ws: &[Word]) -> Word {
    ws.iter().fold(0, |a, w| a | w)
}

pub fn lo_word(w: Word) -> Word {
    w & 0xFFFF
}

pub fn hi_word(w: Word) -> Word {
    w >> 16
}
