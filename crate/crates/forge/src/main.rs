fn main() {
    std::process::exit(illusion_forge::cli::main_with_args(std::env::args_os()));
}
