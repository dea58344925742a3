fn main() {
    std::process::exit(nonlocalsim::cli::main_with_args(std::env::args_os()));
}
