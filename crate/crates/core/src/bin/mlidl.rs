fn main() {
    std::process::exit(mlidl::cli::run());
}
