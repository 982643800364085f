fn main() {
    std::process::exit(womble_cli::run(std::env::args_os().collect()));
}
