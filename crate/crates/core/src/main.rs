fn main() {
    std::process::exit(lakesim::cli::main_with_args(std::env::args_os()));
}
