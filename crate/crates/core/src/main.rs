use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let caps = std::env::var("IFORMS_CAPS").ok();
    let out = iforms::cli::run_args(std::env::args_os(), caps.as_deref());
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
