fn main() {
    std::process::exit(bamg::cli::run());
}
