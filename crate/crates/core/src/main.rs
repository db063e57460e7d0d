fn main() {
    std::process::exit(mixed_deriv::cli::run(std::env::args_os()));
}
