fn main() {
    std::process::exit(robsub::cli::run(std::env::args_os()));
}
