fn main() {
    std::process::exit(linemv_cli::run(std::env::args_os()));
}
