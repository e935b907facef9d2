fn main() {
    std::process::exit(learnsim_cli::main_with_args(std::env::args_os()));
}
