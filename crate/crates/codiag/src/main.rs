use std::io;
use std::process::ExitCode;

use codiag::cli::{color_enabled, run, Io};

fn main() -> ExitCode {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let mut io = Io { out: &mut out, err: &mut err, color: color_enabled() };
    ExitCode::from(run(std::env::args_os(), &mut io))
}
