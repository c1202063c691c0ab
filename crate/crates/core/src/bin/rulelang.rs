fn main() {
    std::process::exit(rulelang::cli::main());
}
