fn main() {
    std::process::exit(levelk::cli::run(std::env::args_os()));
}
