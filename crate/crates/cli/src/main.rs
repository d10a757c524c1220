fn main() {
    std::process::exit(metastab_cli::run_cli(std::env::args_os()));
}
