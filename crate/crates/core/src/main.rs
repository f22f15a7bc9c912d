fn main() {
    std::process::exit(vkrod::cli::main_with_args(std::env::args_os()));
}
