fn main() {
    std::process::exit(ucvx_cli::run(std::env::args_os()));
}
