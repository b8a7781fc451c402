//! A window procedure whose state lives on a worker thread. The wndproc
//! passes each message over a channel and serves the worker's API calls
//! until it answers.

use mlidl::winsim::bounce::{run_bounce, Wiring};
use mlidl::winsim::{wndproc_queue_adapter, MsgArgs, SimError, Win32, W32};
use mlidl::wordmem::{Machine, Word};

fn count(n: &u32, msg: MsgArgs, api: &mut dyn Win32) -> Result<(u32, Word), SimError> {
    // The worker can still call the API; the call runs on the pumping thread.
    let r = api.word(
        "User.DefWindowProcA",
        &[msg.hwnd.into(), msg.code.into(), 0.into(), 0.into()],
    )?;
    Ok((n + 1, r + msg.code))
}

fn main() -> Result<(), SimError> {
    let w32 = W32::load()?;
    let mut m = Machine::new();
    let world = mlidl::winsim::SimWorld::new();
    mlidl::winsim::install(&world, &mut m, &w32.desc)?;

    let adapter = wndproc_queue_adapter(0u32, count);
    let wndproc = adapter.wndproc(&w32);
    let at = m.fun_to_addr(&wndproc);
    for code in [1, 5, 0x113, 2] {
        println!("message 0x{code:X} -> {}", m.call(at, &[7, code, 0, 0])?);
    }
    println!("worker saw {} messages", adapter.finish()?);

    let cells = run_bounce(200, Wiring::Cells)?;
    let queued = run_bounce(200, Wiring::Queue)?;
    println!("bounce traces identical: {}", cells.trace_text() == queued.trace_text());
    Ok(())
}
