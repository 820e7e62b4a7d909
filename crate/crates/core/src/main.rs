fn main() {
    std::process::exit(privtree::cli::run());
}
