use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(swlab::cli::parse_and_dispatch(std::env::args_os()) as u8)
}
