use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(contour_flow::cli::run(std::env::args_os()) as u8)
}
