fn main() {
    std::process::exit(edgecrit::cli::run(std::env::args_os()));
}
