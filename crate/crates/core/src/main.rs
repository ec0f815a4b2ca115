fn main() {
    std::process::exit(ot_rates::cli::main_with_args(std::env::args_os()));
}
