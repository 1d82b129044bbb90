fn main() {
    std::process::exit(rwf_harness::cli::main_with_args(std::env::args_os()));
}
