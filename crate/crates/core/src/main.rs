fn main() {
    std::process::exit(rqf_core::cli::main_with_args(std::env::args_os()));
}
