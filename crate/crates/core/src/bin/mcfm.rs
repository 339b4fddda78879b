fn main() {
    std::process::exit(mcfm::cli::run(std::env::args_os()));
}
