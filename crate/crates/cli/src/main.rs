use std::process::ExitCode;

fn main() -> ExitCode {
    cantor_spectra::main_with_args(std::env::args_os())
}
