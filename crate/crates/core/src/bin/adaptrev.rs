fn main() {
    std::process::exit(adaptrev_core::cli::main());
}
