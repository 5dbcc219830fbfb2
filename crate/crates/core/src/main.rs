fn main() {
    std::process::exit(envkit::cli::run(std::env::args_os()));
}
