fn main() {
    std::process::exit(masound::cli::main_with_args(std::env::args_os()));
}
