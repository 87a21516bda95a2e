fn main() {
    std::process::exit(finsler_kahler::cli::run(std::env::args_os()));
}
