fn main() {
    std::process::exit(xferlab::cli::run(std::env::args_os()));
}
