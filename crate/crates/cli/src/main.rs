fn main() {
    std::process::exit(ost_cli::run(std::env::args_os()));
}
