use std::process::ExitCode;

fn main() -> ExitCode {
    bb84_collective::cli::run(std::env::args_os())
}
