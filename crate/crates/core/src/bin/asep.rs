fn main() {
    std::process::exit(asep_lab::cli::parse_and_run(std::env::args_os()));
}
