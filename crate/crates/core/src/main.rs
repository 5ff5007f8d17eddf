fn main() {
    std::process::exit(qrng_mesh::harness::run_from_args(std::env::args_os()));
}
