fn main() {
    std::process::exit(fugnn_cli::main_with_args(std::env::args_os()));
}
