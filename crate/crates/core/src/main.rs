fn main() {
    std::process::exit(cdca::cli::run(std::env::args_os()));
}
