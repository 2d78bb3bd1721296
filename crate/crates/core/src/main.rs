fn main() {
    std::process::exit(electro_coord::cli::run_from(std::env::args_os()));
}
