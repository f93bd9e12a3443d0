fn main() {
    std::process::exit(hsan_cli::run(std::env::args_os()));
}
