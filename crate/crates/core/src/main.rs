fn main() {
    std::process::exit(leovec_core::cli::main_with_args(std::env::args_os()));
}
