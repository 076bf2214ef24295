fn main() {
    std::process::exit(evonet::cli::run(std::env::args_os()));
}
