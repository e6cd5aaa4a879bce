fn main() {
    std::process::exit(eulerlike::cli::run(std::env::args_os()));
}
