fn main() {
    std::process::exit(xlbt::cli::run_cli(std::env::args_os()));
}
