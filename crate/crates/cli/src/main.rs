fn main() {
    std::process::exit(logweight_cli::run(std::env::args().collect()));
}
