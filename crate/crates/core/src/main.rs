fn main() {
    std::process::exit(perilotka::cli::main_with_args(std::env::args_os()));
}
