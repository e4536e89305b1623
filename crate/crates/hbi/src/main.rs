fn main() {
    std::process::exit(hbi::cli::run_cli(std::env::args_os()));
}
