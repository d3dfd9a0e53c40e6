fn main() {
    std::process::exit(qham_forge::cli::run(std::env::args().collect()));
}
