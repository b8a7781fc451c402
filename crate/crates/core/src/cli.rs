//! The `mlidl` command line: `compile`, `run-demo`, and `check`.
//!
//! Exit codes: 0 success, 1 usage error, 2 compile error, 3 runtime
//! error. With `MLIDL_TRACE=1` the word machine's operation trace goes
//! to the error stream.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::binding::{build_binding, emit_binding_file, emit_sig_text, Level, Manifest, Mode};
use crate::idl::compile_unit;
use crate::winsim::bounce::{run_bounce_on, Wiring};
use crate::wordmem::Machine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPILE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mlidl", version, about = "IDL compiler and simulated Win32/COM runtime")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile one IDL file to signature text and/or a binding sidecar.
    Compile {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dynamic")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "auto")]
        level: LevelArg,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sig,binding")]
        emit: Vec<Emit>,
        #[arg(short = 'o', long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
        /// IID/CLSID manifest, required for com mode.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run a bundled demo in the window-system simulator.
    RunDemo {
        demo: Demo,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        ticks: u64,
        /// Where to write the trace; stdout if omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Route the window procedure through the worker-thread adapter.
        #[arg(long)]
        adapter: bool,
    },
    /// Parse and resolve IDL files without generating anything.
    Check {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Static,
    Dynamic,
    Com,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Abstract,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Sig,
    Binding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Bounce,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Static => Mode::Static,
            ModeArg::Dynamic => Mode::Dynamic,
            ModeArg::Com => Mode::Com,
        }
    }
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Abstract => Level::Abstract,
            LevelArg::Auto => Level::Auto,
        }
    }
}

/// A failure with its exit code.
struct Failure(i32, String);

fn compile_err(msg: impl Into<String>) -> Failure {
    Failure(EXIT_COMPILE, msg.into())
}

fn runtime_err(msg: impl Into<String>) -> Failure {
    Failure(EXIT_RUNTIME, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| compile_err(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
}

fn op_trace_enabled() -> bool {
    std::env::var("MLIDL_TRACE").is_ok_and(|v| v == "1")
}

fn compile(
    input: &Path,
    mode: Mode,
    level: Level,
    emit: &[Emit],
    out_dir: &Path,
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let name = input.display().to_string();
    let text = read(input)?;
    let unit = compile_unit(&text, &name).map_err(|e| compile_err(e.diagnostic(&name)))?;
    let manifest = match manifest {
        Some(p) => Some(Manifest::parse(&read(p)?).map_err(|e| compile_err(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let desc = build_binding(&unit, mode, level, manifest.as_ref()).map_err(|e| compile_err(format!("{name}: {e}")))?;
    fs::create_dir_all(out_dir).map_err(|e| runtime_err(format!("{}: {e}", out_dir.display())))?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let mut kinds = emit.to_vec();
    kinds.dedup();
    for kind in kinds {
        let (file, body) = match kind {
            Emit::Sig => (format!("{stem}.sig"), emit_sig_text(&desc)),
            Emit::Binding => (format!("{stem}.binding.json"), emit_binding_file(&desc)),
        };
        let path = out_dir.join(file);
        write_file(&path, &body)?;
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(())
}

fn run_demo(
    ticks: u64,
    trace: Option<&Path>,
    adapter: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let mut m = Machine::new();
    if op_trace_enabled() {
        m.enable_trace();
    }
    let wiring = if adapter { Wiring::Queue } else { Wiring::Cells };
    let run = run_bounce_on(&mut m, ticks, wiring);
    for line in m.take_trace() {
        let _ = writeln!(err, "{line}");
    }
    let run = run.map_err(|e| runtime_err(format!("bounce: {e}")))?;
    let text = run.trace_text();
    match trace {
        Some(p) => write_file(p, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    match run.exit {
        Some(0) => Ok(()),
        Some(code) => Err(runtime_err(format!("bounce exited with {code}"))),
        None => Err(runtime_err("bounce did not quit")),
    }
}

fn check(inputs: &[PathBuf], out: &mut dyn Write) -> Result<(), Failure> {
    let mut failures = Vec::new();
    for input in inputs {
        let name = input.display().to_string();
        match read(input).and_then(|t| compile_unit(&t, &name).map_err(|e| compile_err(e.diagnostic(&name)))) {
            Ok(unit) => {
                let _ = writeln!(out, "{name}: ok ({} interface(s))", unit.interfaces().count());
            }
            Err(Failure(_, msg)) => failures.push(msg),
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(compile_err(failures.join("\n")))
    }
}

/// Runs the command line `args` (program name first) and returns the
/// exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Compile {
            input,
            mode,
            level,
            emit,
            out_dir,
            manifest,
        } => compile(
            input,
            (*mode).into(),
            (*level).into(),
            emit,
            out_dir,
            manifest.as_deref(),
            out,
        ),
        Command::RunDemo {
            demo: Demo::Bounce,
            ticks,
            trace,
            adapter,
        } => run_demo(*ticks, trace.as_deref(), *adapter, out, err),
        Command::Check { inputs } => check(inputs, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "mlidl: {msg}");
            code
        }
    }
}

/// Runs with the process's arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("mlidl").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn idl(name: &str) -> String {
        format!("{}/idl/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn compile_writes_both_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let o = dir.path().to_str().unwrap();
        let (code, _, err) = go(&[
            "compile",
            &idl("win32.idl"),
            "--mode",
            "dynamic",
            "--level",
            "auto",
            "--emit",
            "sig,binding",
            "-o",
            o,
        ]);
        assert_eq!(code, 0, "{err}");
        let sig = fs::read_to_string(dir.path().join("win32.sig")).unwrap();
        assert!(sig.contains("val BeginPaint : HWND -> (PAINTSTRUCT * HDC)"));
        let json = fs::read_to_string(dir.path().join("win32.binding.json")).unwrap();
        crate::binding::load_binding_file(&json).unwrap();
    }

    #[test]
    fn compile_errors() {
        let (code, _, err) = go(&["compile", "missing.idl"]);
        assert_eq!(code, EXIT_COMPILE);
        assert!(err.contains("missing.idl"), "{err}");
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.idl");
        fs::write(&bad, "interface X { int f(; }").unwrap();
        let (code, _, err) = go(&["check", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_COMPILE);
        assert!(err.contains("bad.idl:1:"), "{err}");
        let (code, _, err) = go(&[
            "compile",
            &idl("bar.idl"),
            "--mode",
            "com",
            "-o",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_COMPILE, "{err}");
    }

    #[test]
    fn com_mode_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "compile",
            &idl("bar.idl"),
            "--mode",
            "com",
            "--emit",
            "sig",
            "--manifest",
            &idl("bar.manifest"),
            "-o",
            dir.path().to_str().unwrap(),
        ];
        let (code, _, err) = go(&args.iter().map(|s| s.as_ref()).collect::<Vec<&str>>());
        assert_eq!(code, 0, "{err}");
        assert!(dir.path().join("bar.sig").exists());
        assert!(!dir.path().join("bar.binding.json").exists());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(go(&["compile", "x.idl", "--frobnicate"]).0, EXIT_USAGE);
        assert_eq!(go(&["compile"]).0, EXIT_USAGE);
        assert_eq!(go(&["compile", "a.idl", "b.idl"]).0, EXIT_USAGE);
        assert_eq!(go(&["run-demo", "bounce", "--ticks", "0"]).0, EXIT_USAGE);
        assert_eq!(go(&["run-demo", "pong"]).0, EXIT_USAGE);
        let (code, out, _) = go(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("run-demo"));
    }

    #[test]
    fn check_reports_interfaces() {
        let (code, out, _) = go(&["check", &idl("appendix_a.idl"), &idl("time.idl")]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn run_demo_writes_trace() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("t.log");
        let (code, _, err) = go(&["run-demo", "bounce", "--ticks", "20", "--trace", t.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let text = fs::read_to_string(&t).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let (code, out, _) = go(&["run-demo", "bounce", "--ticks", "20", "--adapter"]);
        assert_eq!(code, 0);
        assert_eq!(out, text);
    }
}
