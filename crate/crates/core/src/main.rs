fn main() {
    std::process::exit(brainmr::cli::main_with_args(std::env::args_os()));
}
