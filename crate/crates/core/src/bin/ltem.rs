fn main() {
    std::process::exit(ltem::cli::run_from(std::env::args_os()));
}
