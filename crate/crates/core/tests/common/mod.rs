//! Test oracles shared by the integration targets.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn idl_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("idl").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The bouncing-logo program written out by hand against a minimal model
/// of the simulator (one handle counter, one timer, one window) that
/// prints the trace it should produce for `ticks` ticks, with the window
/// closed at the end of the last tick.
pub fn reference_trace(ticks: u64) -> String {
    struct Ref {
        out: String,
        tick: u64,
        next_handle: u32,
    }

    impl Ref {
        fn fresh(&mut self) -> u32 {
            let h = self.next_handle;
            self.next_handle += 1;
            h
        }
        fn draw(&mut self, op: &str, args: &str) {
            self.out += &format!("TICK {} DRAW {op} {args}\n", self.tick);
        }
        fn msg(&mut self, hwnd: u32, code: u32, wparam: u32, lparam: u32) {
            self.out += &format!(
                "TICK {} MSG 0x{hwnd:08X} 0x{code:08X} 0x{wparam:08X} 0x{lparam:08X}\n",
                self.tick
            );
        }
    }

    let mut r = Ref {
        out: String::new(),
        tick: 0,
        next_handle: 1,
    };
    let hinstance = r.fresh();

    // winmain
    r.draw("LoadIconA", "0 \"#32512\"");
    let _hicon = r.fresh();
    r.draw("LoadCursorA", "0 \"#32512\"");
    let _hcursor = r.fresh();
    r.draw("GetStockObject", "0");
    let _hbrush = r.fresh();
    r.draw("RegisterClassExA", "48 3 \"BouncingSMLNJ\"");
    r.draw(
        "CreateWindowExA",
        &format!(
            "0 \"BouncingSMLNJ\" \"Bouncing SML/NJ\" {} {} {} 500 300 0 0 {hinstance} 0",
            0x00CF_0000,
            i32::MIN,
            i32::MIN
        ),
    );
    let hwnd = r.fresh();

    // WM_CREATE
    r.msg(hwnd, 1, 0, 0);
    r.draw("GetDC", &hwnd.to_string());
    let hdc = r.fresh();
    r.draw("ReleaseDC", &format!("{hwnd} {hdc}"));
    r.draw("SetTimer", &format!("{hwnd} 2 20 0"));

    // WM_SIZE 500 x 300
    r.msg(hwnd, 5, 0, (300 << 16) | 500);
    let (cx_client, cy_client) = (500, 300);
    let (mut x, mut y) = (cx_client / 2, cy_client / 2);
    let (mut dx, mut dy) = (10, 10);
    let (cx_total, cy_total, cx_radius, cy_radius) = (158, 131, 59, 45);
    r.draw("LoadImageA", "0 \"smlnj.bmp\" 0 0 0 16");
    let bitmap = r.fresh();

    r.draw("ShowWindow", &format!("{hwnd} 1"));
    r.draw("UpdateWindow", &hwnd.to_string());
    r.draw("SetForegroundWindow", &hwnd.to_string());

    for t in 1..=ticks {
        r.tick = t;
        r.msg(hwnd, 0x113, 2, 0);
        r.draw("GetDC", &hwnd.to_string());
        let hdc = r.fresh();
        r.draw("CreateCompatibleDC", &hdc.to_string());
        let mem = r.fresh();
        r.draw("SelectObject", &format!("{mem} {bitmap}"));
        r.draw(
            "BitBlt",
            &format!(
                "{hdc} {} {} {cx_total} {cy_total} {mem} 0 0 {}",
                x - cx_total / 2,
                y - cy_total / 2,
                0x00CC_0020
            ),
        );
        r.draw("ReleaseDC", &format!("{hwnd} {hdc}"));
        r.draw("DeleteDC", &mem.to_string());
        x += dx;
        y += dy;
        if x + cx_radius >= cx_client || x - cx_radius <= 0 {
            dx = -dx;
        }
        if y + cy_radius >= cy_client || y - cy_radius <= 0 {
            dy = -dy;
        }
    }

    // the user closes the window
    r.msg(hwnd, 2, 0, 0);
    r.draw("KillTimer", &format!("{hwnd} 2"));
    r.draw("DeleteObject", &bitmap.to_string());
    r.draw("PostQuitMessage", "0");
    r.draw("UnregisterClassA", &format!("\"BouncingSMLNJ\" {hinstance}"));
    r.out
}

/// Parsed `MSG` line: (tick, hwnd, code, wparam, lparam).
pub fn parse_msg(line: &str) -> Option<(u64, u32, u32, u32, u32)> {
    let f: Vec<&str> = line.split(' ').collect();
    if f.len() != 7 || f[0] != "TICK" || f[2] != "MSG" {
        return None;
    }
    let hex = |s: &str| u32::from_str_radix(s.trim_start_matches("0x"), 16).ok();
    Some((f[1].parse().ok()?, hex(f[3])?, hex(f[4])?, hex(f[5])?, hex(f[6])?))
}

/// Destination (x, y) of every `BitBlt` in order.
pub fn blit_origins(trace: &str) -> Vec<(i32, i32)> {
    trace
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            (f.get(3) == Some(&"BitBlt")).then(|| (f[5].parse().unwrap(), f[6].parse().unwrap()))
        })
        .collect()
}

/// Checks the motion seen in a trace: every step is ±`rate` per axis and
/// a step reverses exactly when the previous move brought the ball into
/// contact with a wall.
pub fn check_motion(
    trace: &str,
    client: (i32, i32),
    half: (i32, i32),
    radius: (i32, i32),
    rate: i32,
) -> Result<usize, String> {
    let centers: Vec<(i32, i32)> = blit_origins(trace)
        .into_iter()
        .map(|(x, y)| (x + half.0, y + half.1))
        .collect();
    if centers.len() < 3 {
        return Err(format!("only {} frame(s)", centers.len()));
    }
    let mut flips = 0;
    for k in 1..centers.len() - 1 {
        let (x0, y0) = centers[k - 1];
        let (x1, y1) = centers[k];
        let (x2, y2) = centers[k + 1];
        for (axis, a0, a1, a2, c, r) in [
            ("x", x0, x1, x2, client.0, radius.0),
            ("y", y0, y1, y2, client.1, radius.1),
        ] {
            let (d1, d2) = (a1 - a0, a2 - a1);
            if d1.abs() != rate || d2.abs() != rate {
                return Err(format!("frame {k}: {axis} step {d1}/{d2}"));
            }
            let contact = a1 + r >= c || a1 - r <= 0;
            let flipped = d2 == -d1;
            if contact != flipped {
                return Err(format!("frame {k}: {axis}={a1} contact={contact} flipped={flipped}"));
            }
            flips += flipped as usize;
        }
    }
    Ok(flips)
}

/// Checks each window's message order: WM_CREATE, WM_SIZE, any number of
/// WM_TIMER, then WM_DESTROY.
pub fn check_lifecycle(trace: &str) -> Result<(), String> {
    let mut per_window: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for (_, hwnd, code, _, _) in trace.lines().filter_map(parse_msg) {
        per_window.entry(hwnd).or_default().push(code);
    }
    if per_window.is_empty() {
        return Err("no messages".into());
    }
    for (hwnd, codes) in per_window {
        let ok = codes.len() >= 3
            && codes[0] == 1
            && codes[1] == 5
            && codes[codes.len() - 1] == 2
            && codes[2..codes.len() - 1].iter().all(|c| *c == 0x113);
        if !ok {
            return Err(format!("window {hwnd}: {codes:?}"));
        }
    }
    Ok(())
}
