fn main() {
    std::process::exit(acorsis::cli::run(std::env::args_os()));
}
