fn main() {
    std::process::exit(redpoctor_cli::main_with(std::env::args_os()));
}
