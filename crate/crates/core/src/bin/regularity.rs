fn main() {
    std::process::exit(regularity::cli::main_with_args(std::env::args_os()));
}
