fn main() {
    std::process::exit(enrollnet::cli::main_with_args(std::env::args_os()));
}
