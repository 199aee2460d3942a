fn main() {
    std::process::exit(driftlab_cli::run_cli(std::env::args_os()));
}
