use std::process::ExitCode;

fn main() -> ExitCode {
    balk1::cli::main_with_args(std::env::args_os())
}
