fn main() {
    std::process::exit(highres::cli::main_with_args(std::env::args_os()));
}
