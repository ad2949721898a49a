fn main() {
    std::process::exit(arxivnet::cli::run(std::env::args_os()));
}
