fn main() {
    std::process::exit(lissscan::cli::run(std::env::args_os()));
}
