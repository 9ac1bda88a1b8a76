fn main() {
    std::process::exit(sweep2::cli::run_cli(std::env::args_os()));
}
