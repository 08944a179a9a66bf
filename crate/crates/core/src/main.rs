fn main() {
    std::process::exit(pomdp_core::cli::main_with_args(std::env::args_os()));
}
