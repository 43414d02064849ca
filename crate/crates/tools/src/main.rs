fn main() {
    std::process::exit(abd_tools::cli::run_cli(std::env::args_os()));
}
