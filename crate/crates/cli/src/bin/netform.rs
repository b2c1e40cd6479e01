fn main() {
    std::process::exit(netform_cli::main_with_args(std::env::args_os()));
}
