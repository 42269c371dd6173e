fn main() {
    std::process::exit(capsafe_cli::main_with(std::env::args_os()));
}
