fn main() {
    std::process::exit(nvsim::cli::main());
}
