fn main() {
    std::process::exit(qia_cli::run(std::env::args_os()));
}
