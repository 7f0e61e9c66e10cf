fn main() {
    std::process::exit(qsr::cli::run(std::env::args_os()));
}
