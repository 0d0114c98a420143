fn main() {
    std::process::exit(webrec_cli::run(std::env::args_os()));
}
