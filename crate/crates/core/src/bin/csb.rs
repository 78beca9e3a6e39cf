fn main() {
    std::process::exit(csb::cli::run_cli(std::env::args_os()));
}
