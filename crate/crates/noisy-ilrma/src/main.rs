fn main() {
    std::process::exit(noisy_ilrma::cli::run(std::env::args_os()));
}
