fn main() {
    std::process::exit(wassmatrix::cli::run(std::env::args_os()));
}
