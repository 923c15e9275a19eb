fn main() {
    std::process::exit(opentri_cli::run(std::env::args_os()));
}
