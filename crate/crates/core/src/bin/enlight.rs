fn main() {
    std::process::exit(enlight::cli::run(std::env::args_os()));
}
