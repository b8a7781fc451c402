//! The bouncing-logo program. [`BounceWin`] keeps its state in cells the
//! way the original does; [`step`] is the same logic as a function from
//! state and message to state and result, for use behind
//! [`wndproc_queue_adapter`](super::wndproc_queue_adapter).

use std::cell::Cell;
use std::rc::Rc;

use super::adapter::{wndproc_queue_adapter, QueueAdapter};
use super::{hi_word, install, lo_word, or_words, Arg, Direct, MsgArgs, SimError, SimWorld, Win32, W32};
use super::{WM_CREATE, WM_DESTROY, WM_SIZE, WM_TIMER};
use crate::marshal::{lift_callback, Value};
use crate::wordmem::{Machine, Word, WordFn};

pub const BALL_TIMER: i32 = 2;
pub const MOVE_RATE: i32 = 10;
pub const TIMER_RATE: i32 = 20;

pub const APP_NAME: &str = "BouncingSMLNJ";
pub const TITLE: &str = "Bouncing SML/NJ";
pub const WIDTH: i32 = 500;
pub const HEIGHT: i32 = 300;

pub const CS_VREDRAW: Word = 1;
pub const CS_HREDRAW: Word = 2;
pub const CW_USEDEFAULT: Word = 0x8000_0000;
pub const WS_OVERLAPPEDWINDOW: Word = 0x00CF_0000;
pub const LR_LOADFROMFILE: Word = 0x10;
pub const IMAGE_BITMAP: i32 = 0;
pub const WHITE_BRUSH: i32 = 0;
pub const SRCCOPY: Word = 0x00CC_0020;

/// Everything the program keeps between messages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BounceState {
    pub cx_client: i32,
    pub cy_client: i32,
    pub x_center: i32,
    pub y_center: i32,
    pub cx_total: i32,
    pub cy_total: i32,
    pub cx_radius: i32,
    pub cy_radius: i32,
    pub cx_move: i32,
    pub cy_move: i32,
    pub h_bitmap: Word,
}

fn h(w: Word) -> Arg {
    Arg::Word(w)
}

fn size(s: &mut BounceState, xsize: i32, ysize: i32, api: &mut dyn Win32) -> Result<Word, SimError> {
    s.cx_client = xsize;
    s.cy_client = ysize;
    s.x_center = xsize.div_euclid(2);
    s.y_center = ysize.div_euclid(2);
    s.cx_move = MOVE_RATE;
    s.cy_move = MOVE_RATE;
    s.cx_total = 158;
    s.cy_total = 131;
    s.cx_radius = 118 / 2;
    s.cy_radius = 90 / 2;
    if s.h_bitmap != 0 {
        api.call("Gdi.DeleteObject", &[h(s.h_bitmap)])?;
    }
    s.h_bitmap = api.word(
        "User.LoadImageA",
        &[
            0.into(),
            "smlnj.bmp".into(),
            IMAGE_BITMAP.into(),
            0.into(),
            0.into(),
            or_words(&[LR_LOADFROMFILE]).into(),
        ],
    )?;
    Ok(0)
}

fn timer_ball(s: &mut BounceState, hwnd: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
    if s.h_bitmap == 0 {
        return Ok(0);
    }
    let hdc = api.word("User.GetDC", &[h(hwnd)])?;
    let hdc_mem = api.word("Gdi.CreateCompatibleDC", &[h(hdc)])?;
    api.call("Gdi.SelectObject", &[h(hdc_mem), h(s.h_bitmap)])?;
    api.call(
        "Gdi.BitBlt",
        &[
            h(hdc),
            (s.x_center - s.cx_total.div_euclid(2)).into(),
            (s.y_center - s.cy_total.div_euclid(2)).into(),
            s.cx_total.into(),
            s.cy_total.into(),
            h(hdc_mem),
            0.into(),
            0.into(),
            SRCCOPY.into(),
        ],
    )?;
    api.call("User.ReleaseDC", &[h(hwnd), h(hdc)])?;
    api.call("Gdi.DeleteDC", &[h(hdc_mem)])?;
    s.x_center += s.cx_move;
    s.y_center += s.cy_move;
    if s.x_center + s.cx_radius >= s.cx_client || s.x_center - s.cx_radius <= 0 {
        s.cx_move = -s.cx_move;
    }
    if s.y_center + s.cy_radius >= s.cy_client || s.y_center - s.cy_radius <= 0 {
        s.cy_move = -s.cy_move;
    }
    Ok(0)
}

fn create(hwnd: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
    let hdc = api.word("User.GetDC", &[h(hwnd)])?;
    api.call("User.ReleaseDC", &[h(hwnd), h(hdc)])?;
    api.call("User.SetTimer", &[h(hwnd), BALL_TIMER.into(), TIMER_RATE.into(), h(0)])?;
    Ok(0)
}

fn destroy(s: &BounceState, hwnd: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
    api.call("User.KillTimer", &[h(hwnd), BALL_TIMER.into()])?;
    if s.h_bitmap != 0 {
        api.call("Gdi.DeleteObject", &[h(s.h_bitmap)])?;
    }
    api.call("User.PostQuitMessage", &[0.into()])?;
    Ok(0)
}

fn def_window_proc(msg: MsgArgs, api: &mut dyn Win32) -> Result<Word, SimError> {
    api.word(
        "User.DefWindowProcA",
        &[h(msg.hwnd), h(msg.code), h(msg.wparam), h(msg.lparam)],
    )
}

/// The window procedure as a pure step.
pub fn step(s: &BounceState, msg: MsgArgs, api: &mut dyn Win32) -> Result<(BounceState, Word), SimError> {
    let mut s = *s;
    let ret = match msg.code {
        WM_CREATE => create(msg.hwnd, api)?,
        WM_SIZE => size(&mut s, lo_word(msg.lparam) as i32, hi_word(msg.lparam) as i32, api)?,
        WM_DESTROY => destroy(&s, msg.hwnd, api)?,
        WM_TIMER if msg.wparam as i32 == BALL_TIMER => timer_ball(&mut s, msg.hwnd, api)?,
        WM_TIMER => 0,
        _ => def_window_proc(msg, api)?,
    };
    Ok((s, ret))
}

/// The program with one mutable cell per variable.
#[derive(Default)]
pub struct BounceWin {
    cx_client: Cell<i32>,
    cy_client: Cell<i32>,
    x_center: Cell<i32>,
    y_center: Cell<i32>,
    cx_total: Cell<i32>,
    cy_total: Cell<i32>,
    cx_radius: Cell<i32>,
    cy_radius: Cell<i32>,
    cx_move: Cell<i32>,
    cy_move: Cell<i32>,
    h_bitmap: Cell<Word>,
}

impl BounceWin {
    pub fn state(&self) -> BounceState {
        BounceState {
            cx_client: self.cx_client.get(),
            cy_client: self.cy_client.get(),
            x_center: self.x_center.get(),
            y_center: self.y_center.get(),
            cx_total: self.cx_total.get(),
            cy_total: self.cy_total.get(),
            cx_radius: self.cx_radius.get(),
            cy_radius: self.cy_radius.get(),
            cx_move: self.cx_move.get(),
            cy_move: self.cy_move.get(),
            h_bitmap: self.h_bitmap.get(),
        }
    }

    fn destroy(&self, hwnd: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
        api.call("User.KillTimer", &[h(hwnd), BALL_TIMER.into()])?;
        if self.h_bitmap.get() != 0 {
            api.call("Gdi.DeleteObject", &[h(self.h_bitmap.get())])?;
        }
        api.call("User.PostQuitMessage", &[0.into()])?;
        Ok(0)
    }

    fn size(&self, xsize: i32, ysize: i32, api: &mut dyn Win32) -> Result<Word, SimError> {
        self.cx_client.set(xsize);
        self.cy_client.set(ysize);
        self.x_center.set(xsize.div_euclid(2));
        self.y_center.set(ysize.div_euclid(2));
        self.cx_move.set(MOVE_RATE);
        self.cy_move.set(MOVE_RATE);
        self.cx_total.set(158);
        self.cy_total.set(131);
        self.cx_radius.set(118 / 2);
        self.cy_radius.set(90 / 2);
        if self.h_bitmap.get() != 0 {
            api.call("Gdi.DeleteObject", &[h(self.h_bitmap.get())])?;
        }
        let args: [Arg; 6] = [
            0.into(),
            "smlnj.bmp".into(),
            IMAGE_BITMAP.into(),
            0.into(),
            0.into(),
            or_words(&[LR_LOADFROMFILE]).into(),
        ];
        self.h_bitmap.set(api.word("User.LoadImageA", &args)?);
        Ok(0)
    }

    fn timer_ball(&self, hwnd: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
        if self.h_bitmap.get() == 0 {
            return Ok(0);
        }
        let hdc = api.word("User.GetDC", &[h(hwnd)])?;
        let hdc_mem = api.word("Gdi.CreateCompatibleDC", &[h(hdc)])?;
        api.call("Gdi.SelectObject", &[h(hdc_mem), h(self.h_bitmap.get())])?;
        api.call(
            "Gdi.BitBlt",
            &[
                h(hdc),
                (self.x_center.get() - self.cx_total.get().div_euclid(2)).into(),
                (self.y_center.get() - self.cy_total.get().div_euclid(2)).into(),
                self.cx_total.get().into(),
                self.cy_total.get().into(),
                h(hdc_mem),
                0.into(),
                0.into(),
                SRCCOPY.into(),
            ],
        )?;
        api.call("User.ReleaseDC", &[h(hwnd), h(hdc)])?;
        api.call("Gdi.DeleteDC", &[h(hdc_mem)])?;
        self.x_center.set(self.x_center.get() + self.cx_move.get());
        self.y_center.set(self.y_center.get() + self.cy_move.get());
        if self.x_center.get() + self.cx_radius.get() >= self.cx_client.get()
            || self.x_center.get() - self.cx_radius.get() <= 0
        {
            self.cx_move.set(-self.cx_move.get());
        }
        if self.y_center.get() + self.cy_radius.get() >= self.cy_client.get()
            || self.y_center.get() - self.cy_radius.get() <= 0
        {
            self.cy_move.set(-self.cy_move.get());
        }
        Ok(0)
    }

    fn timer(&self, hwnd: Word, timer_id: Word, api: &mut dyn Win32) -> Result<Word, SimError> {
        if timer_id as i32 == BALL_TIMER {
            self.timer_ball(hwnd, api)
        } else {
            Ok(0)
        }
    }

    pub fn wndproc(&self, msg: MsgArgs, api: &mut dyn Win32) -> Result<Word, SimError> {
        match msg.code {
            WM_CREATE => create(msg.hwnd, api),
            WM_SIZE => self.size(lo_word(msg.lparam) as i32, hi_word(msg.lparam) as i32, api),
            WM_DESTROY => self.destroy(msg.hwnd, api),
            WM_TIMER => self.timer(msg.hwnd, msg.wparam, api),
            _ => def_window_proc(msg, api),
        }
    }
}

/// Exposes `f` as a `WNDPROC` whose API calls go straight to `w32`.
pub fn direct_wndproc<F>(w32: &W32, f: F) -> Result<WordFn, SimError>
where
    F: Fn(MsgArgs, &mut dyn Win32) -> Result<Word, SimError> + 'static,
{
    let sig = w32
        .desc
        .callback("WNDPROC")
        .cloned()
        .ok_or_else(|| SimError::UnknownApi("WNDPROC".into()))?;
    let w = w32.clone();
    Ok(lift_callback(w32.desc.clone(), sig, move |m, args| {
        let word = |k: usize| args.get(k).and_then(Value::as_word).unwrap_or(0);
        let msg = MsgArgs {
            hwnd: word(0),
            code: word(1),
            wparam: word(2),
            lparam: word(3),
        };
        let mut api = Direct { m, w32: &w };
        f(msg, &mut api)
            .map(|r| Value::Int(r as i32))
            .map_err(SimError::into_fault)
    }))
}

/// The program's entry point: registers the class, creates the window,
/// and runs the message loop for at most `max_ticks` ticks.
pub fn winmain(
    m: &mut Machine,
    w32: &W32,
    world: &SimWorld,
    wndproc: WordFn,
    max_ticks: u64,
) -> Result<Option<i32>, SimError> {
    let hinstance = world.hinstance();
    let idi_application = w32.string_const("IDI_APPLICATION")?;
    let idc_arrow = w32.string_const("IDC_ARROW")?;
    let mut api = Direct { m, w32 };
    let hicon = api.word("User.LoadIconA", &[0.into(), idi_application.as_str().into()])?;
    let hcursor = api.word("User.LoadCursorA", &[0.into(), idc_arrow.as_str().into()])?;
    let hbrush = api.word("Gdi.GetStockObject", &[WHITE_BRUSH.into()])?;
    let wndclassex = Value::record([
        ("cbSize", Value::Word(48)),
        ("style", Value::Int(or_words(&[CS_HREDRAW, CS_VREDRAW]) as i32)),
        ("lpfnWndProc", Value::Callback(wndproc)),
        ("cbClsExtra", Value::Int(0)),
        ("cbWndExtra", Value::Int(0)),
        ("hInstance", Value::Handle(hinstance)),
        ("hIcon", Value::Handle(hicon)),
        ("hCursor", Value::Handle(hcursor)),
        ("hbrBackground", Value::Handle(hbrush)),
        ("lpszMenuName", Value::str("")),
        ("lpszClassName", Value::str(APP_NAME)),
        ("hIconSm", Value::Handle(hicon)),
    ]);
    w32.call(api.m, "User.RegisterClassExA", &[wndclassex])?;
    let hwnd = api.word(
        "User.CreateWindowExA",
        &[
            0.into(),
            APP_NAME.into(),
            TITLE.into(),
            or_words(&[WS_OVERLAPPEDWINDOW]).into(),
            or_words(&[CW_USEDEFAULT]).into(),
            or_words(&[CW_USEDEFAULT]).into(),
            WIDTH.into(),
            HEIGHT.into(),
            h(0),
            h(0),
            h(hinstance),
            h(0),
        ],
    )?;
    if hwnd == 0 {
        return Err(SimError::NoWindow);
    }
    api.call("User.ShowWindow", &[h(hwnd), 1.into()])?;
    api.call("User.UpdateWindow", &[h(hwnd)])?;
    api.call("User.SetForegroundWindow", &[h(hwnd)])?;
    let exit = world.pump(api.m, max_ticks)?;
    api.call("User.UnregisterClassA", &[APP_NAME.into(), h(hinstance)])?;
    Ok(exit)
}

/// How the window procedure reaches the program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wiring {
    /// [`BounceWin`] called directly on the pumping thread.
    Cells,
    /// [`step`] running on a worker behind the queue adapter.
    Queue,
}

pub struct BounceRun {
    pub world: SimWorld,
    pub exit: Option<i32>,
    pub state: BounceState,
}

impl BounceRun {
    pub fn trace_text(&self) -> String {
        self.world.trace_text()
    }
}

/// Runs the program for `ticks` ticks; the user closes the window at the
/// end of the last one.
pub fn run_bounce(ticks: u64, wiring: Wiring) -> Result<BounceRun, SimError> {
    run_bounce_on(&mut Machine::new(), ticks, wiring)
}

pub fn run_bounce_on(m: &mut Machine, ticks: u64, wiring: Wiring) -> Result<BounceRun, SimError> {
    let w32 = W32::load()?;
    let world = SimWorld::new();
    install(&world, m, &w32.desc)?;
    world.destroy_at(ticks);
    let (exit, state) = match wiring {
        Wiring::Cells => {
            let app = Rc::new(BounceWin::default());
            let me = app.clone();
            let wndproc = direct_wndproc(&w32, move |msg, api| me.wndproc(msg, api))?;
            let exit = winmain(m, &w32, &world, wndproc, ticks)?;
            (exit, app.state())
        }
        Wiring::Queue => {
            let adapter: QueueAdapter<BounceState> = wndproc_queue_adapter(BounceState::default(), step);
            let wndproc = adapter.wndproc(&w32);
            let exit = winmain(m, &w32, &world, wndproc, ticks);
            let state = adapter.finish()?;
            (exit?, state)
        }
    };
    Ok(BounceRun { world, exit, state })
}
