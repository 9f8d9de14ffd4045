fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(conical_flow::cli::main_with_args(std::env::args_os()))
}
