fn main() {
    std::process::exit(gk_heat::cli::main_with_args(std::env::args_os()));
}
