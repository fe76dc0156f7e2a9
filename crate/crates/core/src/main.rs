fn main() {
    std::process::exit(dmt::cli::main_with_args(std::env::args_os()));
}
