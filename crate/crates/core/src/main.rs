fn main() {
    std::process::exit(uvaa_core::harness::cli::run(std::env::args_os()));
}
