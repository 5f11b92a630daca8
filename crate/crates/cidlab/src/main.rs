use std::process::ExitCode;

fn main() -> ExitCode {
    cidlab::cli::run_from_env()
}
