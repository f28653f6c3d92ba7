fn main() {
    std::process::exit(moeda::cli::main_with_args(std::env::args().collect()));
}
