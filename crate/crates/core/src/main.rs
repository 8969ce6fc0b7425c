fn main() {
    std::process::exit(logconcave::cli::run());
}
