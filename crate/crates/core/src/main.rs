fn main() {
    std::process::exit(causal_rdf::cli::main_with_args(std::env::args_os()));
}
