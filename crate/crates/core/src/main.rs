fn main() {
    std::process::exit(brn_core::cli::main());
}
