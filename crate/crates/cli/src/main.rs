fn main() {
    std::process::exit(cohexp_cli::run(std::env::args_os()));
}
