fn main() {
    std::process::exit(sgmix::cli::run_from_args(std::env::args_os()));
}
