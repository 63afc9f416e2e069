fn main() {
    std::process::exit(qmsurf::cli::run(std::env::args_os()));
}
