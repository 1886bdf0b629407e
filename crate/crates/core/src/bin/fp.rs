fn main() {
    std::process::exit(fpgdd::cli::main());
}
