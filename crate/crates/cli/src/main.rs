fn main() {
    std::process::exit(kreinlab_cli::cli::main());
}
