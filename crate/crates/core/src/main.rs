fn main() {
    std::process::exit(fairlens::cli::run(std::env::args_os()));
}
