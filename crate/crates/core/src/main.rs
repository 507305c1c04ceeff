fn main() {
    std::process::exit(qec_stopping::cli::run_from_args(std::env::args_os()));
}
