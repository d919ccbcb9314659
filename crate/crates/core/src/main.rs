fn main() {
    std::process::exit(hk_core::cli::main());
}
