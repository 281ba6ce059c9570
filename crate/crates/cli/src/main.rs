use std::process::ExitCode;

fn main() -> ExitCode {
    elastoct_cli::run(std::env::args_os())
}
