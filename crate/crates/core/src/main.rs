use std::process::ExitCode;

fn main() -> ExitCode {
    oens::cli::init_logging();
    ExitCode::from(oens::cli::run(std::env::args_os()))
}
