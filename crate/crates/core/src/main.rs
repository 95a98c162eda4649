fn main() {
    std::process::exit(qds_core::cli::main());
}
