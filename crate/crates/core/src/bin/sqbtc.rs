fn main() {
    std::process::exit(sqbtc::cli::run_from(std::env::args_os()));
}
