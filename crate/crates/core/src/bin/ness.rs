fn main() {
    env_logger::init();
    std::process::exit(ness_core::cli::main_with_args(std::env::args_os()));
}
