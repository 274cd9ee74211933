fn main() {
    std::process::exit(lfc::cli::run());
}
