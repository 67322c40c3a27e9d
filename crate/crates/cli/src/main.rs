fn main() {
    std::process::exit(graphite_cli::run(std::env::args_os()));
}
