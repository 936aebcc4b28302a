fn main() {
    std::process::exit(limitset::cli::main_with_args(std::env::args_os()));
}
