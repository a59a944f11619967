use std::process::ExitCode;

fn main() -> ExitCode {
    scopf::cli::run()
}
