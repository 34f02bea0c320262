fn main() {
    let code = planeclust::cli::main_with_args(std::env::args_os().collect());
    std::process::exit(code);
}
