fn main() {
    std::process::exit(vqakit::cli::run());
}
