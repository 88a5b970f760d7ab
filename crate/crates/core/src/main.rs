fn main() {
    std::process::exit(abduce::cli::run(std::env::args_os()));
}
