fn main() {
    std::process::exit(bihlab::cli::run(std::env::args_os()));
}
