fn main() {
    std::process::exit(brinkman_fosls::cli::main_with_args(std::env::args_os()));
}
