fn main() {
    std::process::exit(reflecta::cli::run(std::env::args_os()));
}
