//! Runs the bouncing-logo program in the simulator and prints the start
//! of its trace and where the ball ended up.
//!
//! ```text
//! cargo run --example bounce -- 100
//! ```

use mlidl::winsim::bounce::{run_bounce, Wiring};

fn main() {
    let ticks = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let run = run_bounce(ticks, Wiring::Cells).unwrap_or_else(|e| {
        eprintln!("bounce: {e}");
        std::process::exit(3);
    });
    let trace = run.world.trace();
    for line in trace.iter().take(24) {
        println!("{line}");
    }
    println!("... {} lines in all", trace.len());
    println!("{}", trace.last().unwrap());
    let s = run.state;
    println!(
        "exit {:?}; ball at ({}, {}) moving ({}, {})",
        run.exit, s.x_center, s.y_center, s.cx_move, s.cy_move
    );
}
