fn main() {
    std::process::exit(backstepping_cli::run_from_args(std::env::args_os()));
}
