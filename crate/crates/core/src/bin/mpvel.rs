fn main() {
    std::process::exit(mpvel::cli::main_with(std::env::args_os()));
}
