fn main() {
    std::process::exit(blockq_cli::run(std::env::args_os()));
}
