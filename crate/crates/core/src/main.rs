fn main() {
    std::process::exit(oschar::cli::run(std::env::args_os()));
}
