fn main() {
    std::process::exit(oscitime::cli::main_with_args(std::env::args_os()));
}
