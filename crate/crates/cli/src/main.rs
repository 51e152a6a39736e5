fn main() {
    std::process::exit(nqmlab_cli::run(std::env::args_os()));
}
