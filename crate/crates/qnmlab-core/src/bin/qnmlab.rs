fn main() {
    std::process::exit(qnmlab_core::cli::run());
}
