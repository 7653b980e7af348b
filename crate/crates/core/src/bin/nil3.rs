fn main() {
    env_logger::init();
    std::process::exit(nil3_dual::cli::main_with(std::env::args_os()));
}
