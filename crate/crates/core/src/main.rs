use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qisim::cli::run(std::env::args_os()))
}
