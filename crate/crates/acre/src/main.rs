fn main() -> std::process::ExitCode {
    acre::cli::run(std::env::args_os())
}
