fn main() {
    std::process::exit(ticktock_cli::main_with_args(std::env::args_os()));
}
