//! A window procedure backed by a worker thread. The wndproc hands each
//! message to the worker over a rendezvous channel and then serves the
//! worker's API calls until it replies, so the program's state lives in
//! one place and is threaded from message to message.

use std::cell::{Cell, RefCell};
use std::rc::Rc;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread::JoinHandle;

use super::{Arg, Direct, MsgArgs, SimError, Win32, W32};
use crate::wordmem::{word_fn, Fault, Word, WordFn};

/// Maps the current state and a message to the next state and the
/// wndproc's return word.
pub type Handler<S> = fn(&S, MsgArgs, &mut dyn Win32) -> Result<(S, Word), SimError>;

enum ToWorker {
    Msg(MsgArgs),
    ApiResult(Result<Option<Arg>, SimError>),
    Stop,
}

enum FromWorker {
    Call { api: String, args: Vec<Arg> },
    Done(Word),
    Failed(SimError),
}

/// The worker's view of the API: every call is a round trip to the
/// thread that owns the machine.
struct Remote<'a> {
    tx: &'a SyncSender<FromWorker>,
    rx: &'a Receiver<ToWorker>,
}

impl Win32 for Remote<'_> {
    fn call(&mut self, api: &str, args: &[Arg]) -> Result<Option<Arg>, SimError> {
        let gone = || SimError::Worker("pumping thread hung up".into());
        self.tx
            .send(FromWorker::Call {
                api: api.into(),
                args: args.to_vec(),
            })
            .map_err(|_| gone())?;
        match self.rx.recv().map_err(|_| gone())? {
            ToWorker::ApiResult(r) => r,
            _ => Err(SimError::Worker("expected an API result".into())),
        }
    }
}

fn worker<S>(mut state: S, handler: Handler<S>, tx: SyncSender<FromWorker>, rx: Receiver<ToWorker>) -> S {
    while let Ok(req) = rx.recv() {
        match req {
            ToWorker::Msg(msg) => {
                let mut api = Remote { tx: &tx, rx: &rx };
                let reply = match handler(&state, msg, &mut api) {
                    Ok((next, ret)) => {
                        state = next;
                        FromWorker::Done(ret)
                    }
                    Err(e) => FromWorker::Failed(e),
                };
                if tx.send(reply).is_err() {
                    break;
                }
            }
            ToWorker::Stop => break,
            ToWorker::ApiResult(_) => {
                let _ = tx.send(FromWorker::Failed(SimError::Worker(
                    "API result with no call pending".into(),
                )));
            }
        }
    }
    state
}

struct Link {
    tx: SyncSender<ToWorker>,
    rx: Receiver<FromWorker>,
}

/// The pumping side of the adapter.
pub struct QueueAdapter<S> {
    link: Rc<Link>,
    busy: Rc<Cell<bool>>,
    handle: RefCell<Option<JoinHandle<S>>>,
}

/// Starts a worker threading `initial` through `handler`.
pub fn wndproc_queue_adapter<S: Send + 'static>(initial: S, handler: Handler<S>) -> QueueAdapter<S> {
    let (to_tx, to_rx) = sync_channel(0);
    let (from_tx, from_rx) = sync_channel(0);
    let handle = std::thread::spawn(move || worker(initial, handler, from_tx, to_rx));
    QueueAdapter {
        link: Rc::new(Link { tx: to_tx, rx: from_rx }),
        busy: Rc::new(Cell::new(false)),
        handle: RefCell::new(Some(handle)),
    }
}

impl<S> QueueAdapter<S> {
    /// The window procedure. Each call blocks until the worker replies;
    /// it must run on the pumping thread, never on the worker. A message
    /// sent while another is being handled is refused.
    pub fn wndproc(&self, w32: &W32) -> WordFn {
        let link = self.link.clone();
        let busy = self.busy.clone();
        let w32 = w32.clone();
        word_fn(move |m, a| {
            let [hwnd, code, wparam, lparam] = *a else {
                return Err(Fault::Raised(format!("wndproc takes 4 words, got {}", a.len())));
            };
            if busy.replace(true) {
                return Err(Fault::Raised(format!(
                    "nested message 0x{code:X} while the worker is busy"
                )));
            }
            let result = serve(
                &link,
                m,
                &w32,
                MsgArgs {
                    hwnd,
                    code,
                    wparam,
                    lparam,
                },
            );
            busy.set(false);
            result.map_err(SimError::into_fault)
        })
    }

    /// Stops the worker and returns its final state.
    pub fn finish(self) -> Result<S, SimError> {
        let _ = self.link.tx.send(ToWorker::Stop);
        let handle = self
            .handle
            .borrow_mut()
            .take()
            .ok_or_else(|| SimError::Worker("already finished".into()))?;
        handle.join().map_err(|_| SimError::Worker("worker panicked".into()))
    }
}

fn serve(link: &Link, m: &mut crate::wordmem::Machine, w32: &W32, msg: MsgArgs) -> Result<Word, SimError> {
    let gone = || SimError::Worker("worker is gone".into());
    link.tx.send(ToWorker::Msg(msg)).map_err(|_| gone())?;
    loop {
        match link.rx.recv().map_err(|_| gone())? {
            FromWorker::Call { api, args } => {
                let r = Direct { m, w32 }.call(&api, &args);
                link.tx.send(ToWorker::ApiResult(r)).map_err(|_| gone())?;
            }
            FromWorker::Done(w) => return Ok(w),
            FromWorker::Failed(e) => return Err(e),
        }
    }
}
