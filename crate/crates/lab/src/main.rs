fn main() {
    std::process::exit(nlab::cli::main_with(std::env::args_os()));
}
