fn main() {
    std::process::exit(mslab::cli::main_with_args(std::env::args_os()));
}
