fn main() {
    std::process::exit(fplab_cli::run_cli(std::env::args_os()));
}
