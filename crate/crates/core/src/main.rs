fn main() {
    std::process::exit(srj::cli::run(std::env::args_os()));
}
