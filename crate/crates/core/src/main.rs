fn main() {
    std::process::exit(bvtrace::cli::main());
}
