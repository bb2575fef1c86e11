fn main() {
    std::process::exit(dpbandit::cli::run(std::env::args_os()));
}
