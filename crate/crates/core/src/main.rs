fn main() {
    std::process::exit(bhtree::cli::run_from(std::env::args_os()));
}
