fn main() {
    std::process::exit(rescov::harness::cli::run(std::env::args_os()));
}
