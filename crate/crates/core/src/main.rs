fn main() {
    std::process::exit(sheafmod::cli::main_with_args(std::env::args_os()));
}
