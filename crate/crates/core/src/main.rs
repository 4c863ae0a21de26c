fn main() {
    std::process::exit(rialign::cli::main_with_args(std::env::args_os()));
}
