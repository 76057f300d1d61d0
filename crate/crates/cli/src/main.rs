fn main() -> std::process::ExitCode {
    deficiency_cli::main_with(std::env::args_os())
}
