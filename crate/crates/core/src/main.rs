fn main() {
    std::process::exit(pspin::cli::run(std::env::args().collect()));
}
