fn main() {
    std::process::exit(tagtrail::cli::run());
}
