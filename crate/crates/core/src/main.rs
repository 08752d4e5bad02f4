fn main() {
    std::process::exit(omegacount::cli::run(std::env::args_os()));
}
