fn main() {
    std::process::exit(qsl::cli::main_with_args(std::env::args_os()));
}
