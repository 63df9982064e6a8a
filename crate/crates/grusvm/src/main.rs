fn main() {
    std::process::exit(grusvm::cli::run());
}
