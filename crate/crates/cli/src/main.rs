use std::io::Write;
use std::process::ExitCode;

use bellsim_cli::{run_cli, EXIT_INTERNAL};

fn main() -> ExitCode {
    let result = std::panic::catch_unwind(|| run_cli(std::env::args()));
    let out = match result {
        Ok(out) => out,
        Err(_) => return ExitCode::from(EXIT_INTERNAL as u8),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
