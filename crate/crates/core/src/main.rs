fn main() {
    std::process::exit(ratecert::cli::run(std::env::args_os()));
}
