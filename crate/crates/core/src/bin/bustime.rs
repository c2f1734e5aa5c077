fn main() {
    std::process::exit(bustime::cli::main_with_args(std::env::args_os()));
}
