fn main() {
    std::process::exit(sparq::cli::run(std::env::args_os()));
}
