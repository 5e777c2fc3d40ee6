fn main() {
    std::process::exit(ranksets_cli::app::main_with_args(std::env::args_os()));
}
